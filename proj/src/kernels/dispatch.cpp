#include <atomic>
#include <stdexcept>
#include <string>

#include "adarank/kernels.hpp"

namespace adarank::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{nullptr};
  return table;
}

}  // namespace

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

Isa detect() { return available(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const Table& table(Isa isa) {
  if (!available(isa)) {
    throw std::invalid_argument("kernel variant '" + std::string(name(isa)) +
                                "' is not available on this CPU");
  }
  return isa == Isa::avx2 ? *avx2_table() : scalar_table();
}

const Table& active() {
  const Table* t = current().load(std::memory_order_acquire);
  if (t == nullptr) {
    t = &table(detect());
    current().store(t, std::memory_order_release);
  }
  return *t;
}

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "avx2") return Isa::avx2;
  if (text == "auto") return detect();
  throw std::invalid_argument("unknown kernel variant '" + std::string(text) +
                              "' (expected scalar, avx2 or auto)");
}

}  // namespace adarank::kernels
