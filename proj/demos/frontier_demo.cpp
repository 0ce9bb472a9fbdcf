// Builds the efficient frontier for a one-asset market and compares the
// no-jump case against the closed-form variance curve.

#include <cmath>
#include <cstdio>

#include "jumplq/meanvariance.hpp"

using namespace jumplq;

int main() {
  MarketModel mkt;
  mkt.horizon = 1.0;
  mkt.assets = 1;
  mkt.noise = 1;
  mkt.rate = TimeGridded<double>::constant(0.03);
  mkt.excess = TimeGridded<Eigen::VectorXd>::constant(Eigen::VectorXd::Constant(1, 0.17));
  mkt.vol = TimeGridded<Eigen::MatrixXd>::constant(Eigen::MatrixXd::Constant(1, 1, 0.3));

  const double x0 = 1.0;
  std::vector<double> targets;
  for (int i = 0; i < 8; ++i) targets.push_back(1.05 + 0.05 * i);

  const FrontierResult fr = efficient_frontier(mkt, x0, targets, 800);
  const double theta2 = std::pow(0.17 / 0.3, 2.0);
  std::printf("benchmark x0*e^{rT} = %.15g\n", fr.benchmark);
  std::printf("%8s %18s %18s %18s\n", "target", "variance", "closed form", "stddev");
  for (const auto& pt : fr.points) {
    const double closed =
        std::pow(pt.target - fr.benchmark, 2.0) / (std::exp(theta2 * mkt.horizon) - 1.0);
    std::printf("%8.3f %18.12g %18.12g %18.12g\n", pt.target, pt.variance, closed, pt.stddev);
  }
  return 0;
}
