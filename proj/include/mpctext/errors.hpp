#pragma once

#include <stdexcept>
#include <string>

namespace mpctext {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// API misuse: mismatched ring/party tags, wrong call order, bad arguments.
struct usage_error : error {
    explicit usage_error(const std::string& what) : error(what) {}
};

// Correlated-randomness pool exhausted or misused (e.g. drawing past the
// dealt supply). Exhaustion mid-session is unrecoverable for that session.
struct randomness_error : error {
    explicit randomness_error(const std::string& what) : error(what) {}
};

// Socket/channel failures, handshake mismatches, sequence violations.
struct transport_error : error {
    explicit transport_error(const std::string& what) : error(what) {}
};

// Malformed persisted artifacts: bundle files, model files, corpora.
struct format_error : error {
    explicit format_error(const std::string& what) : error(what) {}
};

// Inconsistent configuration: lexicon hash collisions, bucket overflow,
// profile/flag disagreements.
struct config_error : error {
    explicit config_error(const std::string& what) : error(what) {}
};

// Fixed-point value outside the representable/overflow-safe range.
struct encoding_error : error {
    explicit encoding_error(const std::string& what) : error(what) {}
};

// Model fails its load-time invariants (overflow bound, negative stump
// weights, shape mismatches).
struct model_error : error {
    explicit model_error(const std::string& what) : error(what) {}
};

}  // namespace mpctext
