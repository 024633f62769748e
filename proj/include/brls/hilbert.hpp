#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

// Truncated multi-mode Hilbert space with a deterministic basis order and
// dense embeddings of the single-mode ladder operators.

namespace brls {

struct Mode {
  enum class Kind { bosonic, two_level };
  Kind kind = Kind::two_level;
  int n_max = 1;  // highest occupation, bosonic modes only

  static Mode boson(int n_max) {
    if (n_max < 1) throw std::invalid_argument("Mode: n_max must be >= 1");
    return {Kind::bosonic, n_max};
  }
  static Mode qubit() { return {Kind::two_level, 1}; }
  int dim() const { return n_max + 1; }
};

class HilbertSpace {
 public:
  HilbertSpace(std::vector<Mode> modes,
               std::optional<int> excitation_cap = std::nullopt)
      : modes_(std::move(modes)), cap_(excitation_cap) {
    if (modes_.empty())
      throw std::invalid_argument("HilbertSpace: no modes given");
    if (cap_ && *cap_ < 0)
      throw std::invalid_argument("HilbertSpace: negative excitation cap");
    // lexicographic enumeration over occupation tuples; the cap only
    // filters, so the order never depends on it
    std::vector<int> occ(modes_.size(), 0);
    enumerate(occ, 0, 0);
    if (basis_.empty())
      throw std::invalid_argument("HilbertSpace: empty basis");
    for (std::size_t i = 0; i < basis_.size(); ++i) index_[basis_[i]] = i;
  }

  std::size_t dim() const { return basis_.size(); }
  std::size_t n_modes() const { return modes_.size(); }
  const Mode& mode(std::size_t k) const { return modes_.at(k); }
  const std::vector<int>& occupations(std::size_t state) const {
    return basis_.at(state);
  }
  std::optional<std::size_t> index_of(const std::vector<int>& occ) const {
    auto it = index_.find(occ);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // a_k (bosonic) or sigma^-_k (two-level); lowering never leaves the
  // truncated space, so no matrix element is lost here
  Eigen::MatrixXcd annihilation(std::size_t k) const {
    check_mode(k);
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim(), dim());
    for (std::size_t s = 0; s < basis_.size(); ++s) {
      const int n = basis_[s][k];
      if (n == 0) continue;
      std::vector<int> target = basis_[s];
      target[k] = n - 1;
      const auto t = index_of(target);
      if (!t) continue;
      op(static_cast<Eigen::Index>(*t), static_cast<Eigen::Index>(s)) =
          std::sqrt(static_cast<double>(n));
    }
    return op;
  }

  // raising into states beyond n_max or the excitation cap is projected out
  Eigen::MatrixXcd creation(std::size_t k) const {
    return annihilation(k).adjoint();
  }

  Eigen::MatrixXcd number(std::size_t k) const {
    check_mode(k);
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim(), dim());
    for (std::size_t s = 0; s < basis_.size(); ++s)
      op(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) =
          static_cast<double>(basis_[s][k]);
    return op;
  }

  Eigen::MatrixXcd total_number() const {
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim(), dim());
    for (std::size_t s = 0; s < basis_.size(); ++s) {
      int total = 0;
      for (int n : basis_[s]) total += n;
      op(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = total;
    }
    return op;
  }

  Eigen::MatrixXcd identity() const {
    return Eigen::MatrixXcd::Identity(dim(), dim());
  }

 private:
  void check_mode(std::size_t k) const {
    if (k >= modes_.size())
      throw std::out_of_range("HilbertSpace: mode index out of range");
  }

  void enumerate(std::vector<int>& occ, std::size_t mode, int used) {
    if (mode == modes_.size()) {
      basis_.push_back(occ);
      return;
    }
    const int room = cap_ ? *cap_ - used : modes_[mode].n_max;
    const int top = std::min(modes_[mode].n_max, room);
    for (int n = 0; n <= top; ++n) {
      occ[mode] = n;
      enumerate(occ, mode + 1, used + n);
    }
    occ[mode] = 0;
  }

  std::vector<Mode> modes_;
  std::optional<int> cap_;
  std::vector<std::vector<int>> basis_;
  std::map<std::vector<int>, std::size_t> index_;
};

}  // namespace brls
