#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace linkbait {

// Error taxonomy shared by all modules. The CLI maps config errors to
// exit code 2 and invariant violations to exit code 3.
enum class errc {
    disconnected_server,
    duplicate_id,
    non_positive_bandwidth,
    unknown_endpoint,
    infeasible_profile,
    no_lg_servers,
    k_too_large,
    invalid_tau,
    single_class_training,
    unreachable_destination,
    no_branch_available,
    empty_linkmap,
    config_invalid,
    invariant_violation,
};

class SimError : public std::runtime_error {
public:
    SimError(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw SimError(code, what);
}

// --- deterministic RNG helpers -------------------------------------------
//
// All randomness in a run derives from one master seed through tagged
// substreams, so independent subsystems never perturb each other's draws.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_str(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& tag) {
    return splitmix64(master ^ hash_str(tag));
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t n) {
    return splitmix64(splitmix64(master ^ hash_str(tag)) + n);
}

// Unbiased-enough index draw; deterministic across platforms for a fixed
// mt19937_64 stream (avoids std::uniform_int_distribution implementation
// differences).
inline std::uint64_t rand_below(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double rand_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline double rand_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * rand_unit(rng);
}

}  // namespace linkbait
