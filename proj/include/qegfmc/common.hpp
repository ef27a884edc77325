#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qegfmc {

using cplx = std::complex<double>;
using Bits = std::uint64_t;

using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Entries with magnitude below this are never stored.
inline constexpr double kPruneTolerance = 1e-12;

/// Largest register the dense code paths accept.
inline constexpr int kMaxDenseQubits = 14;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_ = 0;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Qubit q of an n-qubit register lives at bit (n-1-q) of a basis index, so
/// qubit 0 is the most significant position and the bitstring "q0 q1 ..."
/// reads as the binary index.
constexpr Bits qubit_bit(int n_qubits, int q) {
  return Bits{1} << (n_qubits - 1 - q);
}

constexpr bool test_qubit(Bits index, int n_qubits, int q) {
  return (index & qubit_bit(n_qubits, q)) != 0;
}

constexpr int popcount(Bits b) { return std::popcount(b); }

constexpr double parity_sign(Bits b) { return (std::popcount(b) & 1) ? -1.0 : 1.0; }

inline std::string to_bitstring(Bits index, int n_qubits) {
  std::string s(static_cast<std::size_t>(n_qubits), '0');
  for (int q = 0; q < n_qubits; ++q) {
    if (test_qubit(index, n_qubits, q)) s[static_cast<std::size_t>(q)] = '1';
  }
  return s;
}

inline Bits from_bitstring(const std::string& s) {
  Bits index = 0;
  for (char c : s) {
    if (c != '0' && c != '1') throw ParseError("invalid bitstring '" + s + "'", 0);
    index = (index << 1) | static_cast<Bits>(c == '1');
  }
  return index;
}

}  // namespace qegfmc
