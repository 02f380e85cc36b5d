#include "ccnn/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ccnn::kernels {

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
#else
    return false;
#endif
}

const KernelSet& by_name(const std::string& name) {
    if (name == "scalar") return kScalar;
#if defined(__x86_64__) || defined(__i386__)
    if (name == "avx2") {
        if (!avx2_supported())
            throw std::runtime_error("CCNN_SIMD=avx2 requested but the CPU lacks AVX2");
        return kAvx2;
    }
#endif
    throw std::invalid_argument("unknown kernel set: " + name);
}

namespace {
const KernelSet& select() {
    const char* env = std::getenv("CCNN_SIMD");
    if (env && *env) {
        std::string s(env);
        if (s != "auto") return by_name(s);
    }
#if defined(__x86_64__) || defined(__i386__)
    if (avx2_supported()) return kAvx2;
#endif
    return kScalar;
}
}  // namespace

const KernelSet& active() {
    static const KernelSet& set = select();
    return set;
}

}  // namespace ccnn::kernels
