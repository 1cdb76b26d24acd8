#pragma once
// Split symmetric coefficient paths S(t) = diag(A(t), B(t)), the decoupling
// change of coordinates, and fundamental solutions of the two block systems
//
//   block 1:  x' =  xp,  xp' = -A(t) x      (frames [X1; X1'])
//   block 2:  x' = -xp,  xp' = -B(t) x      (frames [X2; X2'])
//
// both started on the vertical Lagrangian frame [0; Id].

#include <indef/error.hpp>
#include <indef/grid.hpp>
#include <indef/ode.hpp>

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace indef {

struct Signature {
  int n = 1;
  int nu = 0;

  int d1() const { return n - nu; }
  int d2() const { return nu; }

  void validate() const {
    if (n < 1 || n > 8 || nu < 0 || nu > n)
      fail(errc::bad_request, "signature out of range (need 1 <= n <= 8, 0 <= nu <= n)");
  }

  Vec j_diag() const {
    Vec j(n);
    for (int i = 0; i < n; ++i) j[i] = i < d1() ? 1.0 : -1.0;
    return j;
  }
};

struct SplitSymmetricPath {
  Signature sig;
  std::function<Mat(double)> A;       // d1 x d1
  std::function<Mat(double)> B;       // d2 x d2
  std::function<Mat(double)> S_full;  // optional full n x n source
  bool constant = false;
  Mat A0, B0;  // captured values when constant

  static SplitSymmetricPath constants(Signature sig, Mat A0, Mat B0) {
    sig.validate();
    if (A0.rows() != sig.d1() || B0.rows() != sig.d2())
      fail(errc::dimension_mismatch, "block sizes do not match the signature");
    SplitSymmetricPath p;
    p.sig = sig;
    p.constant = true;
    p.A0 = A0;
    p.B0 = B0;
    p.A = [A0](double) { return A0; };
    p.B = [B0](double) { return B0; };
    return p;
  }

  static SplitSymmetricPath from_blocks(Signature sig, std::function<Mat(double)> A,
                                        std::function<Mat(double)> B) {
    sig.validate();
    SplitSymmetricPath p;
    p.sig = sig;
    p.A = std::move(A);
    p.B = std::move(B);
    return p;
  }
};

struct DecoupledSystems {
  SplitSymmetricPath path;

  Mat kA(double t) const {
    int d = path.sig.d1();
    Mat k = Mat::Zero(2 * d, 2 * d);
    if (d == 0) return k;
    k.topRightCorner(d, d) = Mat::Identity(d, d);
    k.bottomLeftCorner(d, d) = -path.A(t);
    return k;
  }
  Mat kB(double t) const {
    int d = path.sig.d2();
    Mat k = Mat::Zero(2 * d, 2 * d);
    if (d == 0) return k;
    k.topRightCorner(d, d) = -Mat::Identity(d, d);
    k.bottomLeftCorner(d, d) = -path.B(t);
    return k;
  }
};

// Permutation U reordering w = (u, v) into (u1, v1, u2, v2); with v = Ju'
// this carries the sign flip of the second block for free.
inline Mat decouple_U(const Signature& sig) {
  int n = sig.n, d1 = sig.d1(), d2 = sig.d2();
  Mat U = Mat::Zero(2 * n, 2 * n);
  for (int i = 0; i < d1; ++i) {
    U(i, i) = 1.0;           // u1
    U(d1 + i, n + i) = 1.0;  // v1
  }
  for (int i = 0; i < d2; ++i) {
    U(2 * d1 + i, d1 + i) = 1.0;           // u2
    U(2 * d1 + d2 + i, n + d1 + i) = 1.0;  // v2
  }
  return U;
}

inline DecoupledSystems decouple(const SplitSymmetricPath& S) {
  S.sig.validate();
  const int n = S.sig.n, d1 = S.sig.d1(), d2 = S.sig.d2();
  const Vec j = S.sig.j_diag();
  const Mat U = decouple_U(S.sig);
  DecoupledSystems dec{S};

  // sampled checks: symmetry, off-block mass, and U K = K~ U
  for (int k = 0; k <= 16; ++k) {
    double t = k / 16.0;
    Mat A = d1 > 0 ? S.A(t) : Mat(0, 0);
    Mat B = d2 > 0 ? S.B(t) : Mat(0, 0);
    double scale = 1.0 + (d1 ? A.norm() : 0.0) + (d2 ? B.norm() : 0.0);
    if (d1 && (A - A.transpose()).norm() > 1e-12 * scale)
      throw Error(errc::not_split, "A block not symmetric").with("t", t);
    if (d2 && (B - B.transpose()).norm() > 1e-12 * scale)
      throw Error(errc::not_split, "B block not symmetric").with("t", t);

    Mat Sfull;
    if (S.S_full) {
      Sfull = S.S_full(t);
      if (Sfull.rows() != n || Sfull.cols() != n)
        fail(errc::dimension_mismatch, "full S has wrong dimension");
      double off = 0;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          if ((r < d1) != (c < d1)) off = std::max(off, std::abs(Sfull(r, c)));
      if (off > 1e-10 * (1.0 + Sfull.norm()))
        throw Error(errc::not_split, "off-block entries exceed tolerance")
            .with("t", t)
            .with("max_off_block", off);
    } else {
      Sfull = Mat::Zero(n, n);
      if (d1) Sfull.topLeftCorner(d1, d1) = A;
      if (d2) Sfull.bottomRightCorner(d2, d2) = B;
    }

    Mat K = Mat::Zero(2 * n, 2 * n);
    K.topRightCorner(n, n) = j.asDiagonal();
    K.bottomLeftCorner(n, n) = -Sfull;
    Mat Kt = Mat::Zero(2 * n, 2 * n);
    if (d1) Kt.topLeftCorner(2 * d1, 2 * d1) = dec.kA(t);
    if (d2) Kt.bottomRightCorner(2 * d2, 2 * d2) = dec.kB(t);
    double dev = (U * K - Kt * U).norm();
    if (dev > 1e-12 * (1.0 + K.norm()))
      throw Error(errc::not_split, "decoupling identity violated").with("deviation", dev);
  }
  return dec;
}

namespace detail {

// sin-like and cos-like solution scalars of x'' = -c x
inline double s_of(double c, double t) {
  if (c > 0) {
    double w = std::sqrt(c);
    return std::sin(w * t) / w;
  }
  if (c < 0) {
    double w = std::sqrt(-c);
    return std::sinh(w * t) / w;
  }
  return t;
}
inline double c_of(double c, double t) {
  if (c > 0) return std::cos(std::sqrt(c) * t);
  if (c < 0) return std::cosh(std::sqrt(-c) * t);
  return 1.0;
}

// one block's frame flow, either closed-form (constant coefficient with
// separated eigenvalues) or dense numeric columns
struct BlockFlow {
  int d = 0;
  bool second = false;  // block-2 orientation
  bool closed = false;
  Mat V;    // orthonormal eigenbasis of C (C = A or C = -B)
  Vec lam;  // eigenvalues of C
  std::vector<Trajectory> cols;  // numeric: per column, state (x, xp)

  Mat X_at(double t) const {
    if (d == 0) return Mat(0, 0);
    Mat X(d, d);
    if (closed) {
      Vec s(d);
      for (int i = 0; i < d; ++i) s[i] = s_of(lam[i], t);
      X = V * s.asDiagonal() * V.transpose();
      if (second) X = -X;
      return X;
    }
    for (int jcol = 0; jcol < d; ++jcol) X.col(jcol) = cols[jcol].value(t).head(d);
    return X;
  }
  Mat Xp_at(double t) const {
    if (d == 0) return Mat(0, 0);
    Mat Xp(d, d);
    if (closed) {
      Vec c(d);
      for (int i = 0; i < d; ++i) c[i] = c_of(lam[i], t);
      return V * c.asDiagonal() * V.transpose();
    }
    for (int jcol = 0; jcol < d; ++jcol) Xp.col(jcol) = cols[jcol].value(t).tail(d);
    return Xp;
  }
};

inline BlockFlow make_block_flow(const DecoupledSystems& dec, bool second,
                                 double tol, double t1 = 1.0) {
  BlockFlow flow;
  flow.second = second;
  const auto& path = dec.path;
  flow.d = second ? path.sig.d2() : path.sig.d1();
  if (flow.d == 0) return flow;

  if (path.constant) {
    Mat C = second ? Mat(-path.B0) : path.A0;
    Eigen::SelfAdjointEigenSolver<Mat> es(C);
    bool separated = true;
    for (int i = 1; i < flow.d; ++i)
      if (es.eigenvalues()[i] - es.eigenvalues()[i - 1] <= 1e-8) separated = false;
    if (flow.d == 1 || separated) {
      flow.closed = true;
      flow.V = es.eigenvectors();
      flow.lam = es.eigenvalues();
      return flow;
    }
  }

  const int d = flow.d;
  auto rhs = [&path, second, d](double t, const Vec& y) {
    Mat M = second ? path.B(t) : path.A(t);
    Vec f(2 * d);
    if (second) {
      f.head(d) = -y.tail(d);
      f.tail(d) = -M * y.head(d);
    } else {
      f.head(d) = y.tail(d);
      f.tail(d) = -M * y.head(d);
    }
    return f;
  };
  flow.cols.reserve(d);
  for (int jcol = 0; jcol < d; ++jcol) {
    Vec y0 = Vec::Zero(2 * d);
    y0[d + jcol] = 1.0;
    flow.cols.push_back(integrate(rhs, y0, 0.0, t1, OdeOptions{.tol = tol}));
  }
  return flow;
}

}  // namespace detail

struct FundamentalSolution {
  Signature sig;
  TimeGrid grid;
  std::vector<Mat> X1, X1p, X2, X2p;  // per grid point
  detail::BlockFlow flow1, flow2;     // dense access

  Mat frames1(int k) const {
    Mat F(2 * sig.d1(), sig.d1());
    F.topRows(sig.d1()) = X1[k];
    F.bottomRows(sig.d1()) = X1p[k];
    return F;
  }
  Mat frames2(int k) const {
    Mat F(2 * sig.d2(), sig.d2());
    F.topRows(sig.d2()) = X2[k];
    F.bottomRows(sig.d2()) = X2p[k];
    return F;
  }
};

inline FundamentalSolution fundamental_solution(const DecoupledSystems& dec,
                                                const TimeGrid& grid,
                                                double tol = 1e-10) {
  grid.validate();
  FundamentalSolution F;
  F.sig = dec.path.sig;
  F.grid = grid;
  if (grid.front() != 0.0)
    fail(errc::bad_request, "fundamental_solution: grid must start at t = 0");
  F.flow1 = detail::make_block_flow(dec, false, tol, grid.back());
  F.flow2 = detail::make_block_flow(dec, true, tol, grid.back());

  const int m = grid.size();
  F.X1.resize(m); F.X1p.resize(m); F.X2.resize(m); F.X2p.resize(m);
  for (int k = 0; k < m; ++k) {
    double t = grid.points[k];
    F.X1[k] = F.flow1.X_at(t);
    F.X1p[k] = F.flow1.Xp_at(t);
    F.X2[k] = F.flow2.X_at(t);
    F.X2p[k] = F.flow2.Xp_at(t);
    for (int blk = 0; blk < 2; ++blk) {
      int d = blk == 0 ? F.sig.d1() : F.sig.d2();
      if (d == 0) continue;
      Mat frame(2 * d, d);
      frame.topRows(d) = blk == 0 ? F.X1[k] : F.X2[k];
      frame.bottomRows(d) = blk == 0 ? F.X1p[k] : F.X2p[k];
      double smin = frame.jacobiSvd().singularValues().minCoeff();
      if (smin <= 1e-10 * (1.0 + frame.norm()))
        throw Error(errc::rank_loss, "fundamental frame lost rank")
            .with("t", t)
            .with("block", (long long)(blk + 1))
            .with("smin", smin);
    }
  }
  return F;
}

}  // namespace indef
