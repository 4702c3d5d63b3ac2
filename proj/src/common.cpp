#include "common.hpp"

#include <cstdio>

namespace stcae {

namespace {

void default_warn(const std::string& msg) {
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

WarnSink g_sink = &default_warn;

}  // namespace

void set_warn_sink(WarnSink sink) {
    g_sink = sink ? sink : &default_warn;
}

void warn(const std::string& msg) {
    g_sink(msg);
}

}  // namespace stcae
