/*
 * vstubmw — context-driven service binding middleware with transparent
 * virtual-stub caching.
 *
 * C API over the C++ core: opaque handles, integer status codes, JSON
 * strings at the boundary. Every char** out-parameter receives a buffer
 * owned by the library; release it with vsmw_string_free. On any status
 * other than VSMW_OK, vsmw_last_error() returns a thread-local message.
 */

#ifndef VSTUBMW_H
#define VSTUBMW_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VSMW_API __declspec(dllexport)
#else
#define VSMW_API __attribute__((visibility("default")))
#endif

typedef enum vsmw_status {
  VSMW_OK = 0,
  VSMW_ERR_INVALID_ARG = 1,
  VSMW_ERR_PARSE = 2,
  VSMW_ERR_INVALID_KEY = 3,
  VSMW_ERR_NOT_FOUND = 4,
  VSMW_ERR_REGISTRY_UNAVAILABLE = 5,
  VSMW_ERR_TRANSPORT = 6,
  VSMW_ERR_STALE_EPOCH = 7,
  VSMW_ERR_NO_SUCH_METHOD = 8,
  VSMW_ERR_BAD_ARGS = 9,
  VSMW_ERR_INTERNAL = 10,
  VSMW_ERR_UNRESOLVABLE_BINDING = 11,
  VSMW_ERR_KEY_MISMATCH = 12,
  VSMW_ERR_NOT_BOUND = 13,
  VSMW_ERR_DUPLICATE_POLICY = 14,
  VSMW_ERR_PORT_IN_USE = 15,
  VSMW_ERR_SETUP = 16,
  VSMW_ERR_TRIAL = 17,
  VSMW_ERR_INSUFFICIENT_SAMPLES = 18,
  VSMW_ERR_IO = 19,
  VSMW_ERR_OVERSIZED_FRAME = 20,
  VSMW_ERR_TRUNCATED_FRAME = 21,
  VSMW_ERR_MALFORMED_PAYLOAD = 22,
} vsmw_status;

VSMW_API const char* vsmw_status_name(vsmw_status status);
VSMW_API const char* vsmw_last_error(void);
VSMW_API void vsmw_string_free(char* s);

/* ---- registry server ---- */

typedef struct vsmw_registry_server vsmw_registry_server;

VSMW_API vsmw_status vsmw_registry_server_start(const char* host, uint16_t port,
                                                vsmw_registry_server** out);
VSMW_API uint16_t vsmw_registry_server_port(const vsmw_registry_server* server);
VSMW_API void vsmw_registry_server_free(vsmw_registry_server* server);

/* ---- registry client ----
 * addr is "host:port". Descriptor JSON:
 * {"key","host","port","service_id","epoch"}. */

typedef struct vsmw_registry vsmw_registry;

VSMW_API vsmw_status vsmw_registry_open(const char* addr, vsmw_registry** out);
VSMW_API vsmw_status vsmw_registry_register(vsmw_registry* registry,
                                            const char* key, const char* type,
                                            const char* host, uint16_t port,
                                            uint64_t service_id,
                                            char** out_descriptor_json);
VSMW_API vsmw_status vsmw_registry_lookup(vsmw_registry* registry,
                                          const char* key,
                                          char** out_descriptor_json);
VSMW_API vsmw_status vsmw_registry_unregister(vsmw_registry* registry,
                                              const char* key, uint64_t epoch);
VSMW_API vsmw_status vsmw_registry_list(vsmw_registry* registry,
                                        const char* prefix, char** out_json);
VSMW_API vsmw_status vsmw_registry_stats(vsmw_registry* registry,
                                         char** out_json);
VSMW_API void vsmw_registry_free(vsmw_registry* registry);

/* ---- service host (bundled device catalog: "light", "ac") ---- */

typedef struct vsmw_service vsmw_service;

VSMW_API vsmw_status vsmw_service_start(const char* registry_addr,
                                        const char* key, const char* type,
                                        const char* listen_host, uint16_t port,
                                        vsmw_service** out);
VSMW_API vsmw_status vsmw_service_descriptor(const vsmw_service* service,
                                             char** out_json);
VSMW_API void vsmw_service_stop(vsmw_service* service);
VSMW_API void vsmw_service_free(vsmw_service* service);

/* ---- virtual stub cache ---- */

typedef struct vsmw_cache vsmw_cache;
typedef struct vsmw_stub vsmw_stub;

/* capacity 0 means unbounded; otherwise LRU eviction at capacity. */
VSMW_API vsmw_status vsmw_cache_new(const char* registry_addr, size_t capacity,
                                    vsmw_cache** out);
VSMW_API vsmw_status vsmw_cache_get(vsmw_cache* cache, const char* key,
                                    int* out_hit, vsmw_stub** out);
VSMW_API vsmw_status vsmw_cache_invalidate(vsmw_cache* cache, const char* key,
                                           int* out_removed);
VSMW_API vsmw_status vsmw_cache_clear(vsmw_cache* cache, size_t* out_removed);
VSMW_API vsmw_status vsmw_cache_stats(const vsmw_cache* cache, char** out_json);
VSMW_API vsmw_status vsmw_cache_dump(const vsmw_cache* cache, char** out_json);
VSMW_API void vsmw_cache_free(vsmw_cache* cache);

/* Stub handles are shared references; freeing one never tears down a stub
 * the cache or a user component still holds. */
VSMW_API vsmw_status vsmw_stub_invoke(vsmw_stub* stub, const char* method,
                                      const char* args_json,
                                      char** out_value_json);
VSMW_API vsmw_status vsmw_stub_snapshot(const vsmw_stub* stub, char** out_json);
VSMW_API vsmw_status vsmw_stub_counters(const vsmw_stub* stub, uint64_t* calls,
                                        uint64_t* failovers, uint64_t* retries);
VSMW_API void vsmw_stub_free(vsmw_stub* stub);

/* ---- reconfiguration engine ---- */

typedef struct vsmw_engine vsmw_engine;

/* The engine shares the cache handle. bypass != 0 resolves every bind
 * through the registry instead of the cache. */
VSMW_API vsmw_status vsmw_engine_new(vsmw_cache* cache, int bypass,
                                     vsmw_engine** out);
VSMW_API vsmw_status vsmw_engine_load_policies(vsmw_engine* engine,
                                               const char* policies_json,
                                               size_t* out_count);
/* event JSON: {"event_type","user","location","phase"}. Returns the binding
 * reports produced by matching policies as a JSON array. */
VSMW_API vsmw_status vsmw_engine_submit_event(vsmw_engine* engine,
                                              const char* event_json,
                                              char** out_reports_json);
VSMW_API vsmw_status vsmw_engine_bind(vsmw_engine* engine, const char* user,
                                      const char* key, char** out_report_json);
VSMW_API vsmw_status vsmw_engine_unbind(vsmw_engine* engine, const char* user,
                                        const char* key, int* out_removed);
VSMW_API vsmw_status vsmw_engine_invoke_bound(vsmw_engine* engine,
                                              const char* user, const char* key,
                                              const char* method,
                                              const char* args_json,
                                              char** out_value_json);
VSMW_API void vsmw_engine_free(vsmw_engine* engine);

/* ---- benchmark and scenario harness ----
 * config JSON: {"mode":"cached"|"uncached"|"cold-clear","trials":N,
 *               "warmup_trials":N,"bindings_per_trigger":K,"seed":S,
 *               "self_exe":"path-or-empty"}.
 * Result JSON: {"records":[...],"summary":{...}}. */

VSMW_API vsmw_status vsmw_bench_run(const char* config_json,
                                    char** out_result_json);
VSMW_API vsmw_status vsmw_scenario_run(const char* scenario_path,
                                       const char* self_exe,
                                       char** out_report_json);
/* records JSON array -> CSV text (header + one row per trial). */
VSMW_API vsmw_status vsmw_report_csv(const char* records_json, char** out_csv);
/* records JSON array -> per-mode mean/stddev table + uncached/cached ratio. */
VSMW_API vsmw_status vsmw_report_text(const char* records_json, char** out_text);
/* CSV text -> {"records":[...],"summaries":[...]} (re-parse oracle). */
VSMW_API vsmw_status vsmw_csv_parse(const char* csv_text, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* VSTUBMW_H */
