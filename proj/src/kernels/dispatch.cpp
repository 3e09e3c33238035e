#include <atomic>
#include <cstdlib>
#include <string>

#include "attnkd/kernels/kernels.hpp"

namespace attnkd::kernels {
namespace {

const KernelTable* by_name(std::string_view name) {
    if (name == "scalar") return &scalar_table();
    if (name == "avx2") return avx2_table();
    return nullptr;
}

const KernelTable* initial_table() {
    if (const char* env = std::getenv("ATTNKD_KERNELS")) {
        if (const KernelTable* t = by_name(env)) return t;
    }
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> out{&scalar_table()};
    if (const KernelTable* t = avx2_table()) out.push_back(t);
    return out;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
    const KernelTable* t = by_name(name);
    if (!t) return false;
    current().store(t, std::memory_order_relaxed);
    return true;
}

}  // namespace attnkd::kernels
