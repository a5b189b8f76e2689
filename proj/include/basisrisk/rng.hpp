#ifndef BASISRISK_RNG_HPP
#define BASISRISK_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace basisrisk {

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/**
 * Derive an independent stream seed from a base seed and a key path.
 *
 * Each key is folded in with a SplitMix64 round, so (seed, {T, r}) and
 * (seed, {T', r'}) give unrelated streams unless the keys are equal.
 */
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

/// Stream tags keep different consumers of one base seed apart.
namespace stream_tag {
inline constexpr std::uint64_t replication = 0x7265706cULL;
inline constexpr std::uint64_t oracle = 0x6f72636cULL;
inline constexpr std::uint64_t rotation = 0x726f7461ULL;
inline constexpr std::uint64_t grid_cell = 0x67726964ULL;
inline constexpr std::uint64_t haar = 0x68616172ULL;
}  // namespace stream_tag

/// Standard normal generator owning its own engine.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return normal_(engine_); }

    /// Fills column-major, so a prefix of the draws is the first column.
    void fill(Eigen::Ref<Eigen::MatrixXd> out);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace basisrisk

#endif
