#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>

#include "vstubmw/harness.hpp"

extern char** environ;

namespace vstubmw {

// One spawned "vstub-mw registry|service ..." child. The child announces
// readiness by printing `READY {...json...}` on stdout; we keep the pipe open
// afterwards so a wedged child cannot block on a full pipe (it stays quiet
// after READY by design).
struct Orchestrator::Child {
  pid_t pid = -1;
  int stdout_fd = -1;
  Json ready;

  ~Child() { terminate(); }

  static std::unique_ptr<Child> spawn(const std::vector<std::string>& argv,
                                      int ready_timeout_ms = 10000) {
    int pipe_fds[2];
    if (::pipe(pipe_fds) != 0) {
      raise(ErrorCode::kSetupFailure, "pipe: " + std::string(strerror(errno)));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, pipe_fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, pipe_fds[0]);
    posix_spawn_file_actions_addclose(&actions, pipe_fds[1]);

    std::vector<char*> c_argv;
    c_argv.reserve(argv.size() + 1);
    for (const auto& arg : argv) c_argv.push_back(const_cast<char*>(arg.c_str()));
    c_argv.push_back(nullptr);

    pid_t pid = -1;
    int rc = ::posix_spawn(&pid, argv[0].c_str(), &actions, nullptr,
                           c_argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(pipe_fds[1]);
    if (rc != 0) {
      ::close(pipe_fds[0]);
      raise(ErrorCode::kSetupFailure,
            "spawn " + argv[0] + ": " + std::string(strerror(rc)));
    }

    auto child = std::make_unique<Child>();
    child->pid = pid;
    child->stdout_fd = pipe_fds[0];
    child->ready = child->await_ready(ready_timeout_ms);
    return child;
  }

  Json await_ready(int timeout_ms) {
    std::string line;
    char ch = 0;
    while (true) {
      pollfd pfd{stdout_fd, POLLIN, 0};
      int ready_fds = ::poll(&pfd, 1, timeout_ms);
      if (ready_fds <= 0) {
        raise(ErrorCode::kSetupFailure, "child produced no READY line");
      }
      ssize_t n = ::read(stdout_fd, &ch, 1);
      if (n <= 0) {
        raise(ErrorCode::kSetupFailure, "child exited before READY");
      }
      if (ch == '\n') {
        if (line.rfind("READY ", 0) == 0) {
          Json doc = Json::parse(line.substr(6), nullptr, false);
          if (doc.is_discarded()) {
            raise(ErrorCode::kSetupFailure, "bad READY payload: " + line);
          }
          return doc;
        }
        line.clear();  // skip any pre-READY chatter
      } else {
        line += ch;
      }
    }
  }

  void terminate() {
    if (pid > 0) {
      ::kill(pid, SIGTERM);
      int status = 0;
      for (int i = 0; i < 200; ++i) {  // ~2s grace, then SIGKILL
        if (::waitpid(pid, &status, WNOHANG) == pid) {
          pid = -1;
          break;
        }
        ::usleep(10000);
      }
      if (pid > 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        pid = -1;
      }
    }
    if (stdout_fd >= 0) {
      ::close(stdout_fd);
      stdout_fd = -1;
    }
  }
};

Orchestrator::Orchestrator(Options options) : options_(std::move(options)) {}

Orchestrator::~Orchestrator() {
  services_.clear();  // children terminated / hosts stopped before registry
  registry_child_.reset();
  if (registry_) registry_->stop();
}

HostPort Orchestrator::start_registry(const HostPort& listen) {
  if (registry_ || registry_child_) {
    raise(ErrorCode::kSetupFailure, "registry already started");
  }
  try {
    if (in_process()) {
      registry_ = std::make_unique<RegistryServer>();
      registry_->start(listen);
      registry_addr_ = {listen.host, registry_->port()};
    } else {
      registry_child_ = Orchestrator::Child::spawn(
          {options_.self_exe, "registry", "--listen", listen.str()});
      registry_addr_ = {listen.host,
                        registry_child_->ready.at("port").get<uint16_t>()};
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSetupFailure) throw;
    raise(ErrorCode::kSetupFailure, e.what());
  }
  return registry_addr_;
}

ProxyDescriptor Orchestrator::start_service(const std::string& key,
                                            const std::string& service_type,
                                            uint16_t port) {
  if (registry_addr_.port == 0) {
    raise(ErrorCode::kSetupFailure, "start the registry first");
  }
  Service service;
  service.key = key;
  service.service_type = service_type;
  try {
    if (in_process()) {
      service.host = std::make_unique<ServiceHost>(
          make_device_service(service_type, key), registry_addr_,
          HostPort{"127.0.0.1", port});
      service.descriptor = service.host->descriptor();
    } else {
      service.child = Orchestrator::Child::spawn(
          {options_.self_exe, "service", "--registry", registry_addr_.str(),
           "--key", key, "--type", service_type, "--listen",
           HostPort{"127.0.0.1", port}.str()});
      service.descriptor =
          ProxyDescriptor::from_json(service.child->ready.at("descriptor"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSetupFailure) throw;
    raise(ErrorCode::kSetupFailure,
          "service " + key + ": " + std::string(e.what()));
  }
  service.port = service.descriptor.port;
  service.running = true;

  for (auto& existing : services_) {
    if (existing.key == key) {
      existing = std::move(service);
      return existing.descriptor;
    }
  }
  services_.push_back(std::move(service));
  return services_.back().descriptor;
}

Orchestrator::Service& Orchestrator::find_service(const std::string& key) {
  for (auto& service : services_) {
    if (service.key == key) return service;
  }
  raise(ErrorCode::kSetupFailure, "unknown service " + key);
}

const Orchestrator::Service& Orchestrator::find_service(
    const std::string& key) const {
  for (const auto& service : services_) {
    if (service.key == key) return service;
  }
  raise(ErrorCode::kSetupFailure, "unknown service " + key);
}

void Orchestrator::stop_service(const std::string& key) {
  Service& service = find_service(key);
  if (!service.running) return;
  if (service.host) {
    service.host->stop();
  } else if (service.child) {
    service.child->terminate();
  }
  service.running = false;
}

ProxyDescriptor Orchestrator::restart_service(const std::string& key,
                                              uint16_t new_port) {
  Service& service = find_service(key);
  uint16_t port = new_port != 0 ? new_port : service.port;
  std::string service_type = service.service_type;
  stop_service(key);
  return start_service(key, service_type, port);
}

ProxyDescriptor Orchestrator::current_descriptor(const std::string& key) const {
  return find_service(key).descriptor;
}

bool Orchestrator::service_running(const std::string& key) const {
  return find_service(key).running;
}

std::vector<std::string> Orchestrator::service_keys() const {
  std::vector<std::string> keys;
  for (const auto& service : services_) keys.push_back(service.key);
  return keys;
}

RegistryStats Orchestrator::registry_stats() {
  RegistryClient client(registry_addr_);
  return client.stats();
}

}  // namespace vstubmw
