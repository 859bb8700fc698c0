#include "lodspde/basis_cache.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "lodspde/errors.hpp"

namespace lodspde {

namespace {

constexpr std::array<char, 8> kMagic{'L', 'O', 'D', 'M', 'S', 'B', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error("truncated corrector cache");
  }
  return value;
}

BasisCacheHeader read_header(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CacheMismatch("not a lodspde corrector cache");
  }
  BasisCacheHeader h;
  h.coarse_exponent = get<std::int32_t>(in);
  h.fine_exponent = get<std::int32_t>(in);
  h.ell = get<std::int32_t>(in);
  h.coefficient_hash = get<std::uint64_t>(in);
  h.offline_seconds = get<double>(in);
  return h;
}

}  // namespace

void save_basis(const MultiscaleSpace& space,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corrector cache " + path.string());
  SparseMatrix q = space.correctors();
  q.makeCompressed();
  out.write(kMagic.data(), kMagic.size());
  put<std::int32_t>(out, space.coarse_exponent());
  put<std::int32_t>(out, space.fine_exponent());
  put<std::int32_t>(out, space.ell());
  put<std::uint64_t>(out, space.coefficient_hash());
  put<double>(out, space.offline_seconds());
  put<std::int64_t>(out, q.rows());
  put<std::int64_t>(out, q.cols());
  put<std::int64_t>(out, q.nonZeros());
  for (Eigen::Index j = 0; j <= q.cols(); ++j) {
    put<std::int64_t>(out, q.outerIndexPtr()[j]);
  }
  for (Eigen::Index k = 0; k < q.nonZeros(); ++k) {
    put<std::int32_t>(out, q.innerIndexPtr()[k]);
  }
  out.write(reinterpret_cast<const char*>(q.valuePtr()),
            static_cast<std::streamsize>(sizeof(double) * q.nonZeros()));
  if (!out) throw Error("failed writing corrector cache " + path.string());
}

BasisCacheHeader read_basis_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corrector cache " + path.string());
  return read_header(in);
}

MultiscaleSpace load_multiscale_space(const std::filesystem::path& path,
                                      const LevelPair& pair,
                                      const CoefficientField& a,
                                      const SparseOperator& fine_stiffness,
                                      const SparseOperator& fine_mass,
                                      int ell) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corrector cache " + path.string());
  const BasisCacheHeader found = read_header(in);
  const BasisCacheHeader wanted{pair.coarse.level_exponent(),
                                pair.fine.level_exponent(), ell, a.hash(),
                                found.offline_seconds};
  if (!found.matches(wanted)) {
    throw CacheMismatch(fmt::format(
        "corrector cache {} holds (p_H={}, p_h={}, ell={}, A-hash={:016x}) "
        "but (p_H={}, p_h={}, ell={}, A-hash={:016x}) was requested",
        path.string(), found.coarse_exponent, found.fine_exponent, found.ell,
        found.coefficient_hash, wanted.coarse_exponent, wanted.fine_exponent,
        wanted.ell, wanted.coefficient_hash));
  }
  const auto rows = get<std::int64_t>(in);
  const auto cols = get<std::int64_t>(in);
  const auto nnz = get<std::int64_t>(in);
  if (rows != pair.fine.num_interior() || cols != pair.coarse.num_interior() ||
      nnz < 0) {
    throw CacheMismatch("corrector cache has inconsistent dimensions");
  }
  std::vector<std::int64_t> outer(static_cast<std::size_t>(cols) + 1);
  for (auto& o : outer) o = get<std::int64_t>(in);
  std::vector<std::int32_t> inner(static_cast<std::size_t>(nnz));
  for (auto& i : inner) i = get<std::int32_t>(in);
  std::vector<double> values(static_cast<std::size_t>(nnz));
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(sizeof(double) * nnz))) {
    throw Error("truncated corrector cache");
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values.size());
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (auto k = outer[j]; k < outer[j + 1]; ++k) {
      triplets.emplace_back(inner[k], j, values[k]);
    }
  }
  SparseMatrix q(rows, cols);
  q.setFromTriplets(triplets.begin(), triplets.end());
  GridTransfer transfer(pair);
  return MultiscaleSpace(pair, ell, MultiscaleSpace::Kind::Lod,
                         transfer.prolongation(), std::move(q), fine_stiffness,
                         fine_mass, a.hash(), found.offline_seconds);
}

}  // namespace lodspde
