#include "shadowrank/serve.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <future>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace shadowrank {

using nlohmann::json;

namespace {

std::string error_response(const std::string& message, const json& user_id) {
  json out;
  if (!user_id.is_null()) out["user_id"] = user_id;
  out["error"] = message;
  return out.dump();
}

// Runs `handle` on every line from `next_line`, handing responses to `emit`
// in request order.
void process_lines(const ArtifactFile& artifact, const ServeOptions& options,
                   const std::function<bool(std::string&)>& next_line,
                   const std::function<void(const std::string&)>& emit) {
  std::string line;
  auto is_blank = [](const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; };
  if (options.workers <= 1) {
    while (next_line(line)) {
      if (is_blank(line)) continue;
      emit(handle_request(artifact, line, options.strategy));
    }
    return;
  }

  const std::size_t max_pending = static_cast<std::size_t>(options.workers) * 4;
  std::mutex mutex;
  std::condition_variable changed;
  std::deque<std::future<std::string>> pending;
  bool done = false;

  std::thread writer([&] {
    for (;;) {
      std::future<std::string> front;
      {
        std::unique_lock lock(mutex);
        changed.wait(lock, [&] { return done || !pending.empty(); });
        if (pending.empty()) return;
        front = std::move(pending.front());
        pending.pop_front();
      }
      changed.notify_all();
      emit(front.get());
    }
  });
  while (next_line(line)) {
    if (is_blank(line)) continue;
    auto task = std::async(std::launch::async, [&artifact, request = line, strategy = options.strategy] {
      return handle_request(artifact, request, strategy);
    });
    std::unique_lock lock(mutex);
    changed.wait(lock, [&] { return pending.size() < max_pending; });
    pending.push_back(std::move(task));
    changed.notify_all();
  }
  {
    std::lock_guard lock(mutex);
    done = true;
  }
  changed.notify_all();
  writer.join();
}

}  // namespace

std::string handle_request(const ArtifactFile& artifact, std::string_view line, Strategy default_strategy) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error& e) {
    return error_response(std::string("parse error: ") + e.what(), nullptr);
  }
  json user_id = nullptr;
  if (request.is_object() && request.contains("user_id")) user_id = request["user_id"];
  try {
    Strategy strategy = default_strategy;
    if (request.is_object() && request.contains("strategy")) {
      if (!request["strategy"].is_string()) throw DataError("strategy: expected a string");
      strategy = parse_strategy(request["strategy"].get<std::string>());
    }
    const UserRecord record = decode_record(line, artifact.problem);
    const RankingInstance canonical = normalize_constraints(make_instance(artifact.problem, record));
    const OnlineResult result = online_rank(artifact.artifact, canonical, strategy);
    json out;
    out["user_id"] = record.user_id;
    out["strategy"] = strategy_label(strategy);
    out["items"] = result.assignment.item_at_rank;
    out["slack"] = result.compliance.slack;
    out["compliant"] = result.compliance.compliant;
    out["utility"] = result.compliance.utility;
    out["latency_ms"] = result.latency_ms;
    return out.dump();
  } catch (const std::exception& e) {
    return error_response(e.what(), user_id);
  }
}

void serve_stream(const ArtifactFile& artifact, std::istream& in, std::ostream& out, const ServeOptions& options) {
  process_lines(
      artifact, options, [&](std::string& line) { return static_cast<bool>(std::getline(in, line)); },
      [&](const std::string& response) { out << response << '\n' << std::flush; });
}

namespace {

class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}

  bool next(std::string& line) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line.assign(buffer_, 0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      if (eof_) {
        if (buffer_.empty()) return false;
        line = std::move(buffer_);
        buffer_.clear();
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        eof_ = true;
      } else {
        buffer_.append(chunk, static_cast<std::size_t>(n));
      }
    }
  }

 private:
  int fd_;
  std::string buffer_;
  bool eof_ = false;
};

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

void serve_tcp(const ArtifactFile& artifact, std::uint16_t port, const ServeOptions& options,
               const std::function<void(std::uint16_t)>& on_listening,
               const std::function<bool()>& should_stop) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 16) < 0) {
    const std::string message = std::strerror(errno);
    ::close(listener);
    throw Error("cannot listen on port " + std::to_string(port) + ": " + message);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  for (;;) {
    if (should_stop && should_stop()) break;
    pollfd p{listener, POLLIN, 0};
    const int ready = ::poll(&p, 1, 1000);
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) break;
    if (ready == 0) continue;
    const int client = ::accept(listener, nullptr, nullptr);
    if (client < 0) continue;
    FdLineReader reader(client);
    std::atomic<bool> ok{true};
    process_lines(
        artifact, options, [&](std::string& line) { return ok && reader.next(line); },
        [&](const std::string& response) {
          if (ok && !send_all(client, response + "\n")) ok = false;
        });
    ::close(client);
  }
  ::close(listener);
}

}  // namespace shadowrank
