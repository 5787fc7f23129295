#pragma once

#include <Eigen/Core>
#include <vector>

namespace ctdesign {

//! Average ranks (1-based, ties share the mean rank).
Eigen::VectorXd average_ranks(const Eigen::VectorXd& x);

//! Spearman rank correlation (Pearson correlation of average ranks).
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

//! Pearson correlation.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

//! Two-sample Kolmogorov-Smirnov test: asymptotic p-value for the maximum
//! CDF distance between the samples.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

//! Sample median; even lengths use the midpoint of the middle pair.
double median(std::vector<double> x);

//! Sample quantile with linear interpolation between order statistics
//! (the R type-7 rule). p must lie in [0, 1].
double quantile(std::vector<double> x, double p);

//! Sample variance with denominator n - 1 (0 when n < 2).
double sample_variance(const Eigen::VectorXd& x);

}  // namespace ctdesign
