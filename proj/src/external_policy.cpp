#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>

#include "binpack/policy.hpp"

namespace binpack {

namespace {

void default_warn(std::string_view msg) { std::cerr << "warning: " << msg << '\n'; }

}  // namespace

ExternalPolicyHandle::ExternalPolicyHandle(std::string command, ExternalPolicyOptions options)
    : command_(std::move(command)), options_(std::move(options)) {
  if (!options_.warn) options_.warn = default_warn;
  start();
}

ExternalPolicyHandle::~ExternalPolicyHandle() { stop(); }

void ExternalPolicyHandle::start() const {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw std::runtime_error(std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Own process group so that grandchildren spawned by the shell die with it.
    ::setpgid(0, 0);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(fds[1]);
  fd_ = fds[0];
  pid_ = pid;
  pending_.clear();
}

void ExternalPolicyHandle::stop() const {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

std::string ExternalPolicyHandle::round_trip(const std::string& request) const {
  if (fd_ < 0) start();
  const std::string line = request + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      stop();
      throw PolicyProtocolError(std::string("policy endpoint closed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
      std::string reply = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      if (!reply.empty() && reply.back() == '\r') reply.pop_back();
      return reply;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      // A late reply would desynchronize the stream; restart on next use.
      stop();
      throw PolicyTimeout("policy endpoint did not answer within " + std::to_string(options_.timeout.count()) + " ms");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw PolicyProtocolError("policy endpoint closed the connection");
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

PolicyDecision ExternalPolicyHandle::decide(const GridBin& bin, RotatedSize size) const {
  std::lock_guard lock(mutex_);
  const std::string reply = round_trip(encode_query(bin, size));
  const std::optional<int> idx = parse_reply(reply);
  if (!idx || *idx > bin.cells()) {
    throw PolicyProtocolError("malformed policy reply: '" + reply + "'");
  }
  const std::vector<bool> mask = feasibility_mask(bin, size);
  if (mask[static_cast<std::size_t>(*idx)]) {
    if (*idx == bin.cells()) return {PositionAction{*idx}, 0};
    const Anchor a = decode_action(PositionAction{*idx}, bin.width(), bin.height());
    return {PositionAction{*idx}, edge_contact_reward(bin, a.x, a.y, size)};
  }
  ++coerced_;
  options_.warn("external policy returned infeasible action " + std::to_string(*idx) + "; using greedy fallback");
  return greedy_place(bin, size, TieBreakRule::smallest_index());
}

int ExternalPolicyHandle::coerced_count() const {
  std::lock_guard lock(mutex_);
  return coerced_;
}

}  // namespace binpack
