#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qegfmc/common.hpp"

namespace qegfmc {

/// Pauli string stored as X and Z masks in the register's bit convention
/// (qubit q at bit n-1-q). The represented operator is i^{#Y} X^x Z^z, so a
/// qubit with both bits set is a Y.
struct PauliString {
  int n = 0;
  Bits x = 0;
  Bits z = 0;

  static PauliString identity(int n_qubits) { return {n_qubits, 0, 0}; }

  static PauliString from_letters(const std::string& letters) {
    PauliString p{static_cast<int>(letters.size()), 0, 0};
    for (int q = 0; q < p.n; ++q) {
      const Bits b = qubit_bit(p.n, q);
      switch (letters[static_cast<std::size_t>(q)]) {
        case 'I': break;
        case 'X': p.x |= b; break;
        case 'Y': p.x |= b; p.z |= b; break;
        case 'Z': p.z |= b; break;
        default: throw ParseError("invalid Pauli letter in '" + letters + "'", 0);
      }
    }
    return p;
  }

  /// Single-qubit Pauli on qubit q; letter in {I, X, Y, Z}.
  static PauliString single(int n_qubits, int q, char letter) {
    std::string s(static_cast<std::size_t>(n_qubits), 'I');
    s[static_cast<std::size_t>(q)] = letter;
    return from_letters(s);
  }

  /// Product of Z on every qubit in `mask`.
  static PauliString z_mask(int n_qubits, Bits mask) { return {n_qubits, 0, mask}; }
  static PauliString x_mask(int n_qubits, Bits mask) { return {n_qubits, mask, 0}; }

  std::string letters() const {
    std::string s(static_cast<std::size_t>(n), 'I');
    for (int q = 0; q < n; ++q) s[static_cast<std::size_t>(q)] = letter(q);
    return s;
  }

  char letter(int q) const {
    const bool bx = test_qubit(x, n, q), bz = test_qubit(z, n, q);
    return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
  }

  int weight() const { return popcount(x | z); }
  int y_count() const { return popcount(x & z); }
  bool is_identity() const { return (x | z) == 0; }
  bool commutes_with(const PauliString& o) const {
    return (popcount((x & o.z) ^ (z & o.x)) & 1) == 0;
  }

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend bool operator<(const PauliString& a, const PauliString& b) {
    return std::tie(a.n, a.x, a.z) < std::tie(b.n, b.x, b.z);
  }
};

namespace detail {

inline cplx i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace detail

/// a * b = phase * result.
inline std::pair<cplx, PauliString> multiply(const PauliString& a, const PauliString& b) {
  if (a.n != b.n) throw DimensionError("Pauli strings act on different registers");
  const PauliString c{a.n, a.x ^ b.x, a.z ^ b.z};
  const int k = a.y_count() + b.y_count() - c.y_count() + 2 * (popcount(a.z & b.x) & 1);
  return {detail::i_power(k), c};
}

/// P|b> = amplitude * |b ^ x>.
inline cplx pauli_amplitude(const PauliString& p, Bits b) {
  return detail::i_power(p.y_count() + 2 * (popcount(b & p.z) & 1));
}

class PauliOperator {
 public:
  using Terms = std::map<PauliString, cplx>;

  PauliOperator() = default;
  explicit PauliOperator(int n_qubits) : n_(n_qubits) {}
  PauliOperator(const PauliString& p, cplx coeff) : n_(p.n) { add(p, coeff); }

  static PauliOperator identity(int n_qubits, cplx coeff = 1.0) {
    return PauliOperator(PauliString::identity(n_qubits), coeff);
  }

  int n_qubits() const { return n_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  void add(const PauliString& p, cplx coeff) {
    check(p);
    auto [it, inserted] = terms_.emplace(p, coeff);
    if (!inserted) it->second += coeff;
    if (std::abs(it->second) < kPruneTolerance) terms_.erase(it);
  }

  cplx coefficient(const PauliString& p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? cplx{0.0, 0.0} : it->second;
  }

  PauliOperator& operator+=(const PauliOperator& o) {
    adopt(o);
    for (const auto& [p, c] : o.terms_) add(p, c);
    return *this;
  }
  PauliOperator& operator-=(const PauliOperator& o) {
    adopt(o);
    for (const auto& [p, c] : o.terms_) add(p, -c);
    return *this;
  }
  PauliOperator& operator*=(cplx s) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      it = std::abs(it->second) < kPruneTolerance ? terms_.erase(it) : std::next(it);
    }
    return *this;
  }

  friend PauliOperator operator+(PauliOperator a, const PauliOperator& b) { return a += b; }
  friend PauliOperator operator-(PauliOperator a, const PauliOperator& b) { return a -= b; }
  friend PauliOperator operator*(PauliOperator a, cplx s) { return a *= s; }
  friend PauliOperator operator*(cplx s, PauliOperator a) { return a *= s; }

  friend PauliOperator operator*(const PauliOperator& a, const PauliOperator& b) {
    if (a.n_ != b.n_) throw DimensionError("Pauli operators act on different registers");
    PauliOperator out(a.n_);
    for (const auto& [pa, ca] : a.terms_)
      for (const auto& [pb, cb] : b.terms_) {
        const auto [phase, pc] = multiply(pa, pb);
        out.add(pc, phase * ca * cb);
      }
    return out;
  }

  PauliOperator adjoint() const {
    PauliOperator out(n_);
    for (const auto& [p, c] : terms_) out.terms_.emplace(p, std::conj(c));
    return out;
  }

  /// Largest imaginary part among coefficients; zero for Hermitian operators.
  double max_imag() const {
    double m = 0.0;
    for (const auto& [p, c] : terms_) m = std::max(m, std::abs(c.imag()));
    return m;
  }
  bool is_hermitian(double tol = 1e-12) const { return max_imag() <= tol; }

  /// Coefficient of the identity string.
  cplx trace_part() const { return coefficient(PauliString::identity(n_)); }

  /// Frobenius norm squared divided by 2^n.
  double normalized_hs_norm2() const {
    double s = 0.0;
    for (const auto& [p, c] : terms_) s += std::norm(c);
    return s;
  }

  MatrixXc to_dense() const {
    if (n_ > kMaxDenseQubits) throw DimensionError("operator too large to materialize densely");
    const Eigen::Index dim = Eigen::Index{1} << n_;
    MatrixXc m = MatrixXc::Zero(dim, dim);
    for (const auto& [p, c] : terms_)
      for (Bits b = 0; b < static_cast<Bits>(dim); ++b)
        m(static_cast<Eigen::Index>(b ^ p.x), static_cast<Eigen::Index>(b)) += c * pauli_amplitude(p, b);
    return m;
  }

  /// One `<re>+<im>i <letters>` line per term.
  void write(std::ostream& os) const {
    char buf[96];
    for (const auto& [p, c] : terms_) {
      std::snprintf(buf, sizeof buf, "%.17g%+.17gi", c.real(), c.imag());
      os << buf << ' ' << p.letters() << '\n';
    }
  }

  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static PauliOperator read(std::istream& is) {
    PauliOperator op;
    std::string line;
    int lineno = 0;
    bool sized = false;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      std::string coeff, letters;
      if (!(ls >> coeff)) continue;
      if (!(ls >> letters)) throw ParseError("expected '<coeff> <letters>'", lineno);
      const cplx c = parse_complex(coeff, lineno);
      const PauliString p = PauliString::from_letters(letters);
      if (!sized) op.n_ = p.n, sized = true;
      if (p.n != op.n_) throw ParseError("inconsistent Pauli string length", lineno);
      op.add(p, c);
    }
    return op;
  }

 private:
  static cplx parse_complex(const std::string& s, int line) {
    // Forms: "a", "a+bi", "a-bi".
    try {
      if (s.empty() || s.back() != 'i') return {std::stod(s), 0.0};
      std::size_t split = s.size() - 1;
      while (split > 0) {
        --split;
        if ((s[split] == '+' || s[split] == '-') && split > 0 && s[split - 1] != 'e' && s[split - 1] != 'E')
          break;
      }
      if (split == 0) return {0.0, std::stod(s.substr(0, s.size() - 1))};
      return {std::stod(s.substr(0, split)), std::stod(s.substr(split, s.size() - 1 - split))};
    } catch (const std::exception&) {
      throw ParseError("invalid coefficient '" + s + "'", line);
    }
  }

  void check(const PauliString& p) {
    if (n_ == 0 && terms_.empty()) n_ = p.n;
    if (p.n != n_) throw DimensionError("Pauli string length does not match operator");
  }
  void adopt(const PauliOperator& o) {
    if (n_ == 0 && terms_.empty()) n_ = o.n_;
    if (o.n_ != n_ && !o.terms_.empty()) throw DimensionError("Pauli operators act on different registers");
  }

  int n_ = 0;
  Terms terms_;
};

/// op * v, one pass over the amplitudes per term.
inline VectorXc pauli_apply(const PauliOperator& op, const VectorXc& v) {
  const Eigen::Index dim = Eigen::Index{1} << op.n_qubits();
  if (v.size() != dim) throw DimensionError("state dimension does not match operator");
  VectorXc out = VectorXc::Zero(dim);
  for (const auto& [p, c] : op.terms()) {
    const cplx base = c * detail::i_power(p.y_count());
    for (Bits b = 0; b < static_cast<Bits>(dim); ++b) {
      const cplx amp = v(static_cast<Eigen::Index>(b));
      if (amp == cplx{}) continue;
      const double s = parity_sign(b & p.z);
      out(static_cast<Eigen::Index>(b ^ p.x)) += s * base * amp;
    }
  }
  return out;
}

/// <u|op|v>.
inline cplx expectation(const PauliOperator& op, const VectorXc& u, const VectorXc& v) {
  return u.dot(pauli_apply(op, v));
}

}  // namespace qegfmc
