#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stcae {

enum class ErrorKind {
    contract,    // caller violated a documented precondition
    data,        // dataset layout / file content problems
    io,          // filesystem failures
    divergence,  // non-finite loss or gradient during training
    checkpoint,  // checkpoint file does not match the model
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

inline void check(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

inline void check_contract(bool cond, const std::string& msg) {
    check(cond, ErrorKind::contract, msg);
}

// Warnings go through a swappable sink so the CLI can prefix/route them.
using WarnSink = void (*)(const std::string&);
void set_warn_sink(WarnSink sink);
void warn(const std::string& msg);

}  // namespace stcae
