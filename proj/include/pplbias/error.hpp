#pragma once

#include <stdexcept>
#include <string>

namespace pplbias {

// Exception carrying a stable machine-readable code alongside the human
// message. The CLI serializes these as {"error": code, "message": ...} on
// stderr and maps them to exit code 2; see tools/main.cpp.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Stable error codes. Keep in sync with README and the CLI contract.
namespace errc {
inline constexpr const char* parse_error = "parse_error";
inline constexpr const char* validation_error = "validation_error";
inline constexpr const char* duplicate_key = "duplicate_key";
inline constexpr const char* insufficient_data = "insufficient_data";
inline constexpr const char* weak_instrument = "weak_instrument";
inline constexpr const char* degenerate_instrument = "degenerate_instrument";
inline constexpr const char* singular_design = "singular_design";
inline constexpr const char* undefined_delta = "undefined_delta";
inline constexpr const char* undefined_correlation = "undefined_correlation";
inline constexpr const char* degenerate_test = "degenerate_test";
inline constexpr const char* missing_source = "missing_source";
inline constexpr const char* missing_perplexity = "missing_perplexity";
inline constexpr const char* dimension_error = "dimension_error";
inline constexpr const char* domain_error = "domain_error";
inline constexpr const char* assumption_violation = "assumption_violation";
inline constexpr const char* io_error = "io_error";
inline constexpr const char* mismatched_ids = "mismatched_ids";
inline constexpr const char* invalid_argument = "invalid_argument";
}  // namespace errc

}  // namespace pplbias
