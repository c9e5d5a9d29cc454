#include "neuroeco/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace neuroeco::kernels {
namespace {

const KernelTable* pick_default() {
    if (const char* env = std::getenv("SN_SIMD"); env && std::string_view(env) == "scalar") {
        return &scalar();
    }
    if (const KernelTable* t = avx2()) return t;
    return &scalar();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
    switch (isa) {
        case Isa::automatic:
            current().store(pick_default());
            return true;
        case Isa::scalar:
            current().store(&scalar());
            return true;
        case Isa::avx2:
            if (const KernelTable* t = avx2()) {
                current().store(t);
                return true;
            }
            return false;
    }
    return false;
}

}  // namespace neuroeco::kernels
