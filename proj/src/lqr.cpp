#include "rpz/bench.hpp"
#include "rpz/error.hpp"

namespace rpz {

double riccati_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  Eigen::MatrixXd g = R + B.transpose() * P * B;
  Eigen::MatrixXd next = Q + A.transpose() * P * A - A.transpose() * P * B * g.ldlt().solve(B.transpose() * P * A);
  return (next - P).norm();
}

LqrGain lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                 const Eigen::MatrixXd& R, double tol, int max_iter) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || Q.rows() != A.rows() || R.rows() != B.cols())
    throw Error(ErrorKind::Config, "lqr: inconsistent matrix dimensions");
  LqrGain out{Eigen::MatrixXd(), Q, A, B, Q, R, 0, 0.0};
  Eigen::MatrixXd P = Q;
  for (int i = 1; i <= max_iter; ++i) {
    Eigen::MatrixXd g = R + B.transpose() * P * B;
    Eigen::MatrixXd next = Q + A.transpose() * P * A - A.transpose() * P * B * g.ldlt().solve(B.transpose() * P * A);
    next = 0.5 * (next + next.transpose());
    double delta = (next - P).norm();
    P = std::move(next);
    out.iterations = i;
    if (delta < tol) break;
  }
  out.residual = riccati_residual(P, A, B, Q, R);
  if (!(out.residual < tol)) throw Error(ErrorKind::Eval, "lqr: Riccati iteration did not converge");
  out.P = P;
  out.K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
  return out;
}

}  // namespace rpz
