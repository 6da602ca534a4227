#pragma once

// Minimal SVG emitter for the log-log fit plot: scatter of (eps, p-hat) with
// CI whiskers, the fitted line, and an optional predicted-theta reference
// line. Self-contained, no external plotting dependency; output is
// deterministic (no timestamps).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "hetlab/montecarlo.hpp"

namespace hetlab {

namespace detail {
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace detail

inline std::string svg_loglog_fit(const std::vector<EstimateRow>& rows,
                                  const std::optional<PowerLawFit>& fit,
                                  std::optional<double> theta_reference,
                                  const std::string& manifest_ref = "") {
    using detail::fmt;
    const double W = 640, H = 480, ml = 70, mr = 20, mt = 20, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& r : rows) {
        if (r.hits == 0) continue;
        xmin = std::min(xmin, std::log10(r.eps));
        xmax = std::max(xmax, std::log10(r.eps));
        ymin = std::min(ymin, std::log10(std::max(r.ci_low, r.p_hat * 0.5)));
        ymax = std::max(ymax, std::log10(r.ci_high));
    }
    if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymax > ymin)) { ymin -= 0.5; ymax += 0.5; }
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.08 * (ymax - ymin);
    xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;
    auto X = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double ly) { return H - mb - (ly - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) + "\">\n";
    if (!manifest_ref.empty()) s += "<!-- manifest: " + manifest_ref + " -->\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    s += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(H - mb) + "\" x2=\"" + fmt(W - mr) +
         "\" y2=\"" + fmt(H - mb) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) + "\" y2=\"" +
         fmt(H - mb) + "\" stroke=\"black\"/>\n";
    // decade ticks
    for (int d = static_cast<int>(std::floor(xmin)); d <= static_cast<int>(std::ceil(xmax)); ++d) {
        if (d < xmin || d > xmax) continue;
        s += "<line x1=\"" + fmt(X(d)) + "\" y1=\"" + fmt(H - mb) + "\" x2=\"" + fmt(X(d)) +
             "\" y2=\"" + fmt(H - mb + 6) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + fmt(X(d)) + "\" y=\"" + fmt(H - mb + 22) +
             "\" font-size=\"12\" text-anchor=\"middle\">1e" + std::to_string(d) + "</text>\n";
    }
    for (int d = static_cast<int>(std::floor(ymin)); d <= static_cast<int>(std::ceil(ymax)); ++d) {
        if (d < ymin || d > ymax) continue;
        s += "<line x1=\"" + fmt(ml - 6) + "\" y1=\"" + fmt(Y(d)) + "\" x2=\"" + fmt(ml) +
             "\" y2=\"" + fmt(Y(d)) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + fmt(ml - 10) + "\" y=\"" + fmt(Y(d) + 4) +
             "\" font-size=\"12\" text-anchor=\"end\">1e" + std::to_string(d) + "</text>\n";
    }
    s += "<text x=\"" + fmt((ml + W - mr) / 2) + "\" y=\"" + fmt(H - 12) +
         "\" font-size=\"13\" text-anchor=\"middle\">eps</text>\n";
    s += "<text x=\"16\" y=\"" + fmt((mt + H - mb) / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt((mt + H - mb) / 2) + ")\">P(escape)</text>\n";

    double lx0 = 1e300, lx1 = -1e300;
    for (const auto& r : rows) {
        if (r.hits == 0) continue;
        const double lx = std::log10(r.eps);
        lx0 = std::min(lx0, lx);
        lx1 = std::max(lx1, lx);
        const double ly = std::log10(r.p_hat);
        if (r.ci_low > 0.0)
            s += "<line x1=\"" + fmt(X(lx)) + "\" y1=\"" + fmt(Y(std::log10(r.ci_low))) +
                 "\" x2=\"" + fmt(X(lx)) + "\" y2=\"" + fmt(Y(std::log10(r.ci_high))) +
                 "\" stroke=\"steelblue\"/>\n";
        s += "<circle cx=\"" + fmt(X(lx)) + "\" cy=\"" + fmt(Y(ly)) +
             "\" r=\"4\" fill=\"steelblue\"/>\n";
    }
    const double ln10 = std::log(10.0);
    if (fit) {
        auto line_y = [&](double lx) {
            return (std::log(fit->h_hat) + fit->theta_hat * lx * ln10) / ln10;
        };
        s += "<line x1=\"" + fmt(X(lx0)) + "\" y1=\"" + fmt(Y(line_y(lx0))) + "\" x2=\"" +
             fmt(X(lx1)) + "\" y2=\"" + fmt(Y(line_y(lx1))) +
             "\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n";
        s += "<text x=\"" + fmt(W - mr - 8) + "\" y=\"" + fmt(mt + 16) +
             "\" font-size=\"12\" text-anchor=\"end\" fill=\"crimson\">fit theta=" +
             fmt(fit->theta_hat) + " h=" + fmt(fit->h_hat) + "</text>\n";
    }
    if (theta_reference && fit) {
        // reference slope anchored at the first usable point
        double ax = 1e300, ay = 0.0;
        for (const auto& r : rows)
            if (r.hits > 0 && std::log10(r.eps) < ax) { ax = std::log10(r.eps); ay = std::log10(r.p_hat); }
        auto ref_y = [&](double lx) { return ay + *theta_reference * (lx - ax); };
        s += "<line x1=\"" + fmt(X(lx0)) + "\" y1=\"" + fmt(Y(ref_y(lx0))) + "\" x2=\"" +
             fmt(X(lx1)) + "\" y2=\"" + fmt(Y(ref_y(lx1))) +
             "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
        s += "<text x=\"" + fmt(W - mr - 8) + "\" y=\"" + fmt(mt + 32) +
             "\" font-size=\"12\" text-anchor=\"end\" fill=\"gray\">predicted theta=" +
             fmt(*theta_reference) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace hetlab
