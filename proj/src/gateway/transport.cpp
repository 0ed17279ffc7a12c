#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "uvkit/error.hpp"
#include "uvkit/gateway/remote.hpp"

namespace uvkit::gateway {

SubprocessTransport::SubprocessTransport(std::string command) : command_(std::move(command)) {
  std::signal(SIGPIPE, SIG_IGN);
}

SubprocessTransport::~SubprocessTransport() { stop(); }

void SubprocessTransport::start() {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw TransportError("", "pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw TransportError("", "pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw TransportError("", "fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  pending_.clear();
}

void SubprocessTransport::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
}

nlohmann::json SubprocessTransport::call(const nlohmann::json& msg, double timeout_s) {
  std::lock_guard lk(mu_);
  const std::string tile = msg.value("tile_id", "");
  if (pid_ < 0) start();

  const std::string line = msg.dump() + "\n";
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t n = write(to_child_, line.data() + off, line.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      stop();
      throw TransportError(tile, "backend process closed its input");
    }
    off += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  for (;;) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      try {
        return nlohmann::json::parse(reply);
      } catch (const nlohmann::json::exception&) {
        throw ValidationError("backend reply is not JSON: " + reply.substr(0, 200));
      }
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      stop();
      throw TransportError(tile, "timed out after " + std::to_string(timeout_s) + " s");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int r = poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) continue;
    char buf[65536];
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n <= 0) {
      stop();
      throw TransportError(tile, "backend process exited");
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::optional<std::string> backend_uri_from_env() {
  const char* v = std::getenv("UVKIT_BACKEND_URI");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::shared_ptr<Transport> make_transport(const std::string& uri) {
  if (uri.rfind("exec:", 0) == 0) return std::make_shared<SubprocessTransport>(uri.substr(5));
  if (uri.rfind("http://", 0) == 0) return std::make_shared<HttpTransport>(uri);
  throw ConfigError("backend URI must start with exec: or http://, got '" + uri + "'");
}

}  // namespace uvkit::gateway
