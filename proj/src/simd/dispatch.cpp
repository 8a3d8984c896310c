#include "pme/simd_ops.hpp"

#include <cstdlib>
#include <cstring>

namespace pme::simd {
namespace {

const Ops& select() {
    const char* mode = std::getenv("PME_SIMD");
    if (mode && std::strcmp(mode, "scalar") == 0) return scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        if (const Ops* t = avx2_ops()) return *t;
    }
#endif
    return scalar_ops();
}

}  // namespace

const Ops& ops() {
    static const Ops& active = select();
    return active;
}

}  // namespace pme::simd
