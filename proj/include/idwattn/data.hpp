#pragma once

#include "idwattn/matrix.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace idw {

struct Dataset {
    Matrix x;           // N x d
    std::vector<int> y; // N labels in [0, num_classes)
    std::size_t num_classes = 0;

    std::size_t size() const { return x.rows(); }
    std::size_t dim() const { return x.cols(); }
    void validate() const;
};

struct MoonsConfig {
    std::size_t n_train = 100;
    std::size_t n_test = 20;
    double noise_std = 0.1;
    std::uint64_t seed = 0;
};

/// Noise-free arc parametrization, t in [0, pi]:
/// class 0 -> (cos t, sin t); class 1 -> (1 - cos t, 0.5 - sin t).
std::array<double, 2> moons_point(int label, double t);

/// Two interleaving half-circles with i.i.d. Gaussian coordinate noise.
/// Classes are balanced up to rounding; train and test come from
/// independent RNG streams of the same seed.
std::pair<Dataset, Dataset> gen_moons(const MoonsConfig& cfg);

/// IDX container header: big-endian magic, then one big-endian 32-bit size
/// per dimension. Accepted magics: 0x00000803 (images, 3-D) and
/// 0x00000801 (labels, 1-D).
struct IdxHeader {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
};

struct IdxFile {
    IdxHeader header;
    std::vector<unsigned char> payload;
};

IdxFile parse_idx(std::span<const unsigned char> bytes);
std::vector<unsigned char> serialize_idx(const IdxFile& file);
IdxFile read_idx_file(const std::string& path);

/// The four standard file names, in (train images, train labels,
/// test images, test labels) order.
extern const std::array<const char*, 4> kMnistFiles;

/// Loads the standard four-file set from `dir`: pixels scaled to [0,1]
/// by /255, images flattened row-major, ten classes. If
/// `<dir>/mnist.sha256` exists (sha256sum format), every file digest is
/// verified against it first.
std::pair<Dataset, Dataset> load_mnist(const std::string& dir);

/// Deterministic uniform subsample without replacement; n == size() gives a
/// permutation of the full set.
Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed);

/// x1,x2,label CSV with header row, coordinates printed exactly.
void write_points_csv(const std::string& path, const Dataset& ds);
Dataset read_points_csv(const std::string& path, std::size_t num_classes = 2);

} // namespace idw
