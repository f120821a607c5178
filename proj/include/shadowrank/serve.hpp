#pragma once

// Line-delimited serving protocol.
//
// Request:  {"user_id": ..., "u": [...] | "U": [[...]], "x": [...],
//            optional "a"/"A" per-constraint overrides, optional "strategy"}
// Response: {"user_id", "items", "slack", "compliant", "utility",
//            "latency_ms", "strategy"} or {"user_id"?, "error"}
//
// Exactly one response line per request line, in request order.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include "shadowrank/io.hpp"

namespace shadowrank {

struct ServeOptions {
  Strategy strategy = Strategy::kKnn;
  // 1 = sequential; more fans requests across workers, order preserved.
  unsigned workers = 1;
};

/// Never throws for bad input; failures become an error response.
std::string handle_request(const ArtifactFile& artifact, std::string_view line, Strategy default_strategy);

/// Serves until end of input. Blank lines are skipped.
void serve_stream(const ArtifactFile& artifact, std::istream& in, std::ostream& out, const ServeOptions& options);

/// Listens on 127.0.0.1:port (0 picks a free port) and serves each
/// connection as a stream. `on_listening` receives the bound port. Returns
/// when `should_stop` reports true between connections (checked once per
/// second) or on a socket error.
void serve_tcp(const ArtifactFile& artifact, std::uint16_t port, const ServeOptions& options,
               const std::function<void(std::uint16_t)>& on_listening,
               const std::function<bool()>& should_stop = {});

}  // namespace shadowrank
