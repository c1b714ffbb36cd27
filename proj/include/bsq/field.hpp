#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace bsq {

enum class Frame { Y, YBAR };

// Reflection behaviour across one β end: f(-β) = s f(β) for s = +1, -1.
enum class Sym : int { Odd = -1, None = 0, Even = 1 };

struct Parity {
  Sym lo = Sym::None;  // across β = 0
  Sym hi = Sym::None;  // across β = π/2
  friend bool operator==(const Parity&, const Parity&) = default;
};

inline constexpr Parity kOdd{Sym::Odd, Sym::Odd};
inline constexpr Parity kEven{Sym::Even, Sym::Even};
inline constexpr Parity kNone{Sym::None, Sym::None};
// odd across β = 0, even across β = π/2 (temperature-like)
inline constexpr Parity kOddEven{Sym::Odd, Sym::Even};

inline Sym operator*(Sym a, Sym b) { return Sym(int(a) * int(b)); }
inline Parity operator*(Parity a, Parity b) { return {a.lo * b.lo, a.hi * b.hi}; }
inline Parity flip(Parity p) { return {p.lo * Sym::Odd, p.hi * Sym::Odd}; }
inline bool has_parity(Parity p) { return p.lo != Sym::None && p.hi != Sym::None; }

// parities of the trigonometric multipliers used throughout
inline constexpr Parity kSin2b = kOdd;
inline constexpr Parity kCos2b = kEven;
inline constexpr Parity kSinb{Sym::Odd, Sym::Even};
inline constexpr Parity kCosb{Sym::Even, Sym::Odd};
inline constexpr Parity kTanb = kOdd;

std::string to_string(Frame f);
std::string to_string(Parity p);
Frame frame_from_string(const std::string& s);
Parity parity_from_string(const std::string& s);

// Rows index σ, columns index β.
template <class Scalar>
struct FieldT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix data;
  Frame frame = Frame::Y;
  Parity parity = kNone;

  FieldT() = default;
  FieldT(Matrix d, Frame f, Parity p) : data(std::move(d)), frame(f), parity(p) {}

  static FieldT zeros(Eigen::Index ns, Eigen::Index nb, Frame f, Parity p) {
    return FieldT(Matrix::Zero(ns, nb), f, p);
  }
  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
  bool finite() const { return data.allFinite(); }
};

using Field = FieldT<double>;

inline void require_same_shape(const Field& a, const Field& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

inline void require_frame(const Field& a, Frame f, const char* what) {
  if (a.frame != f) throw std::invalid_argument(std::string(what) + ": wrong frame");
}

}  // namespace bsq
