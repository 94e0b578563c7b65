#pragma once

// Reconstruction and background-quality metrics for gray images in [0,255]:
// mean absolute error (AGE), thresholded error-pixel fractions (pEPs and the
// clustered variant pCEPs), PSNR with a 99 dB cap for identical inputs, and
// multi-scale SSIM.  A small report struct aggregates them over a background
// frame sequence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "bmd/errors.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

// Stored factor entries over raw tensor entries for a rank-l bundle.
inline double compression_ratio(std::size_t m, std::size_t p, std::size_t n,
                                std::size_t l) {
    if (m == 0 || p == 0 || n == 0 || l == 0)
        throw dim_error("compression_ratio: dimensions must be positive");
    return static_cast<double>(l) *
           static_cast<double>(m * n + m * p + p * n) /
           static_cast<double>(m * p * n);
}

namespace detail {

inline void check_same_shape(const Matrix& a, const Matrix& b,
                             const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw dim_error(std::string(what) + ": image shapes differ");
    if (a.rows() == 0 || a.cols() == 0)
        throw dim_error(std::string(what) + ": empty image");
}

}  // namespace detail

// Mean absolute gray-level difference.
inline double age(const Matrix& gt, const Matrix& est) {
    detail::check_same_shape(gt, est, "age");
    return (gt - est).cwiseAbs().mean();
}

// Fraction of pixels whose absolute difference exceeds the threshold.
inline double peps(const Matrix& gt, const Matrix& est, double tau = 20.0) {
    detail::check_same_shape(gt, est, "peps");
    const Eigen::Index total = gt.size();
    Eigen::Index bad = 0;
    for (Eigen::Index j = 0; j < gt.cols(); ++j)
        for (Eigen::Index i = 0; i < gt.rows(); ++i)
            if (std::abs(gt(i, j) - est(i, j)) > tau) ++bad;
    return static_cast<double>(bad) / static_cast<double>(total);
}

// Fraction of error pixels whose in-bounds 4-connected neighbors are all
// error pixels as well (isolated errors do not count).
inline double pceps(const Matrix& gt, const Matrix& est, double tau = 20.0) {
    detail::check_same_shape(gt, est, "pceps");
    const Eigen::Index m = gt.rows(), n = gt.cols();
    std::vector<char> err(static_cast<std::size_t>(m * n), 0);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            err[static_cast<std::size_t>(i + m * j)] =
                std::abs(gt(i, j) - est(i, j)) > tau ? 1 : 0;
    auto at = [&](Eigen::Index i, Eigen::Index j) {
        return err[static_cast<std::size_t>(i + m * j)] != 0;
    };
    Eigen::Index clustered = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!at(i, j)) continue;
            const bool ok = (i == 0 || at(i - 1, j)) &&
                            (i == m - 1 || at(i + 1, j)) &&
                            (j == 0 || at(i, j - 1)) &&
                            (j == n - 1 || at(i, j + 1));
            if (ok) ++clustered;
        }
    return static_cast<double>(clustered) / static_cast<double>(m * n);
}

inline constexpr double kPsnrCap = 99.0;

// Peak signal-to-noise ratio in dB, capped at 99 for identical images so
// downstream tables stay finite.
inline double psnr(const Matrix& gt, const Matrix& est, double peak = 255.0) {
    detail::check_same_shape(gt, est, "psnr");
    const double mse = (gt - est).squaredNorm() / static_cast<double>(gt.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

// ---------------------------------------------------------------------------
// Multi-scale SSIM
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix gaussian_window(int radius = 5, double sigma = 1.5) {
    const int size = 2 * radius + 1;
    Matrix w(size, size);
    double sum = 0.0;
    for (int a = -radius; a <= radius; ++a)
        for (int b = -radius; b <= radius; ++b) {
            const double v = std::exp(-(a * a + b * b) / (2.0 * sigma * sigma));
            w(a + radius, b + radius) = v;
            sum += v;
        }
    return w / sum;
}

// Valid-region correlation with a small kernel (no padding).
inline Matrix conv_valid(const Matrix& img, const Matrix& ker) {
    const Eigen::Index outr = img.rows() - ker.rows() + 1;
    const Eigen::Index outc = img.cols() - ker.cols() + 1;
    Matrix out(outr, outc);
    for (Eigen::Index j = 0; j < outc; ++j)
        for (Eigen::Index i = 0; i < outr; ++i)
            out(i, j) =
                (img.block(i, j, ker.rows(), ker.cols()).array() * ker.array())
                    .sum();
    return out;
}

// Mean luminance and contrast-structure terms of one SSIM scale.
inline std::pair<double, double> ssim_scale(const Matrix& a, const Matrix& b,
                                            double peak) {
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    static const Matrix win = gaussian_window();
    Matrix mu1 = conv_valid(a, win), mu2 = conv_valid(b, win);
    Matrix s11 = conv_valid(a.cwiseProduct(a), win) - mu1.cwiseProduct(mu1);
    Matrix s22 = conv_valid(b.cwiseProduct(b), win) - mu2.cwiseProduct(mu2);
    Matrix s12 = conv_valid(a.cwiseProduct(b), win) - mu1.cwiseProduct(mu2);

    double lum = 0.0, cs = 0.0;
    for (Eigen::Index j = 0; j < mu1.cols(); ++j)
        for (Eigen::Index i = 0; i < mu1.rows(); ++i) {
            lum += (2.0 * mu1(i, j) * mu2(i, j) + c1) /
                   (mu1(i, j) * mu1(i, j) + mu2(i, j) * mu2(i, j) + c1);
            cs += (2.0 * s12(i, j) + c2) / (s11(i, j) + s22(i, j) + c2);
        }
    const double cnt = static_cast<double>(mu1.size());
    return {lum / cnt, cs / cnt};
}

// Non-overlapping 2x2 block average (odd trailing row/col dropped).
inline Matrix halve(const Matrix& img) {
    const Eigen::Index m = img.rows() / 2, n = img.cols() / 2;
    Matrix out(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            out(i, j) = 0.25 * (img(2 * i, 2 * j) + img(2 * i + 1, 2 * j) +
                                img(2 * i, 2 * j + 1) + img(2 * i + 1, 2 * j + 1));
    return out;
}

// Sign-preserving power keeps the product in [-1,1] even when a
// contrast-structure mean dips below zero.
inline double signed_pow(double v, double w) {
    return v < 0 ? -std::pow(-v, w) : std::pow(v, w);
}

}  // namespace detail

// Multi-scale structural similarity with the standard five-scale weights.
// Images smaller than the full pyramid use however many scales fit (the
// window needs at least 11x11 pixels) with the weights renormalized.
inline double ms_ssim(const Matrix& gt, const Matrix& est, double peak = 255.0) {
    detail::check_same_shape(gt, est, "ms_ssim");
    static const double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    const int kWindow = 11;

    int scales = 0;
    {
        Eigen::Index r = gt.rows(), c = gt.cols();
        while (scales < 5 && r >= kWindow && c >= kWindow) {
            ++scales;
            r /= 2;
            c /= 2;
        }
    }
    if (scales == 0)
        throw dim_error("ms_ssim: image smaller than the 11x11 window");

    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += kWeights[s];

    Matrix a = gt, b = est;
    double acc = 1.0;
    for (int s = 0; s < scales; ++s) {
        const double w = kWeights[s] / wsum;
        auto [lum, cs] = detail::ssim_scale(a, b, peak);
        acc *= detail::signed_pow(cs, w);
        if (s == scales - 1) acc *= detail::signed_pow(lum, w);
        else {
            a = detail::halve(a);
            b = detail::halve(b);
        }
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Background evaluation over a frame sequence
// ---------------------------------------------------------------------------

struct BackgroundReport {
    double age = 0.0;
    double peps = 0.0;
    double pceps = 0.0;
    double psnr = 0.0;
    double ms_ssim = 0.0;
    // One entry per evaluated frame (a single entry in first-frame mode).
    std::vector<double> age_frames, peps_frames, pceps_frames, psnr_frames,
        ms_ssim_frames;
};

enum class EvalMode { first_frame, per_frame_mean };

// Score a reconstructed background sequence against one ground-truth image:
// either the first frame alone or the mean over every frame.
inline BackgroundReport evaluate_background(const Matrix& gt,
                                            const Tensor3& bg_sequence,
                                            EvalMode mode,
                                            double tau = 20.0,
                                            double peak = 255.0) {
    if (static_cast<std::size_t>(gt.rows()) != bg_sequence.m() ||
        static_cast<std::size_t>(gt.cols()) != bg_sequence.n())
        throw dim_error("evaluate_background: image and sequence shapes differ");

    const std::size_t frames =
        mode == EvalMode::first_frame ? 1 : bg_sequence.p();
    BackgroundReport rep;
    for (std::size_t f = 0; f < frames; ++f) {
        Matrix frame = lateral_slice(bg_sequence, f);
        rep.age_frames.push_back(age(gt, frame));
        rep.peps_frames.push_back(peps(gt, frame, tau));
        rep.pceps_frames.push_back(pceps(gt, frame, tau));
        rep.psnr_frames.push_back(psnr(gt, frame, peak));
        rep.ms_ssim_frames.push_back(ms_ssim(gt, frame, peak));
    }
    auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };
    rep.age = mean(rep.age_frames);
    rep.peps = mean(rep.peps_frames);
    rep.pceps = mean(rep.pceps_frames);
    rep.psnr = mean(rep.psnr_frames);
    rep.ms_ssim = mean(rep.ms_ssim_frames);
    return rep;
}

inline void write_report_kv(const BackgroundReport& rep, std::ostream& os) {
    os.precision(17);
    os << "age=" << rep.age << '\n'
       << "peps=" << rep.peps << '\n'
       << "pceps=" << rep.pceps << '\n'
       << "psnr=" << rep.psnr << '\n'
       << "ms_ssim=" << rep.ms_ssim << '\n';
}

inline void write_report_csv(const BackgroundReport& rep, std::ostream& os) {
    os.precision(17);
    os << "frame,age,peps,pceps,psnr,ms_ssim\n";
    for (std::size_t f = 0; f < rep.age_frames.size(); ++f)
        os << f << ',' << rep.age_frames[f] << ',' << rep.peps_frames[f] << ','
           << rep.pceps_frames[f] << ',' << rep.psnr_frames[f] << ','
           << rep.ms_ssim_frames[f] << '\n';
}

}  // namespace bmd
