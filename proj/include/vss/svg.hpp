#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "shooter.hpp"

namespace vss {

namespace detail {

inline std::string svg_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

// Log-log plot of f and w against r with a dashed w* guide line.
template <class Real>
void write_profile_svg(std::ostream& os, const Profile<Real>& prof, double w_star)
{
    const double W = 720, H = 480, L = 70, R = 20, T = 30, B = 50;
    std::vector<double> lr, lf, lw;
    for (const auto& s : prof.samples) {
        if (s.r > 0 && s.f > 0 && s.w > 0) {
            lr.push_back(std::log10(double(s.r)));
            lf.push_back(std::log10(double(s.f)));
            lw.push_back(std::log10(double(s.w)));
        }
    }
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!lr.empty()) {
        x0 = std::floor(lr.front());
        x1 = std::ceil(lr.back());
        const auto [fmin, fmax] = std::minmax_element(lf.begin(), lf.end());
        const auto [wmin, wmax] = std::minmax_element(lw.begin(), lw.end());
        y0 = std::floor(std::min({*fmin, *wmin, std::log10(w_star)}));
        y1 = std::ceil(std::max({*fmax, *wmax, std::log10(w_star)}));
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    auto X = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto Y = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
    using detail::svg_num;

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const int xstep = std::max(1, int((x1 - x0) / 10));
    for (int k = int(x0); k <= int(x1); k += xstep)
        os << "<text x=\"" << svg_num(X(k)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << k
           << "</text>\n";
    const int ystep = std::max(1, int((y1 - y0) / 10));
    for (int k = int(y0); k <= int(y1); k += ystep)
        os << "<text x=\"" << L - 6 << "\" y=\"" << svg_num(Y(k) + 4) << "\" text-anchor=\"end\">1e" << k
           << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">r</text>\n";

    auto poly = [&](const std::vector<double>& v, const char* color) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < lr.size(); ++i)
            os << svg_num(X(lr[i])) << ',' << svg_num(Y(v[i])) << ' ';
        os << "\"/>\n";
    };
    poly(lf, "#1f77b4");
    poly(lw, "#d62728");

    const double yw = Y(std::log10(w_star));
    os << "<line x1=\"" << L << "\" y1=\"" << svg_num(yw) << "\" x2=\"" << W - R << "\" y2=\"" << svg_num(yw)
       << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << svg_num(yw - 5) << "\" text-anchor=\"end\" fill=\"gray\">w* = "
       << svg_num(w_star) << "</text>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 << "\" fill=\"#1f77b4\">f(r)</text>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 32 << "\" fill=\"#d62728\">w(r) = r^mu f(r)</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << T - 10 << "\" text-anchor=\"middle\">a = " << svg_num(double(prof.a))
       << ", " << to_string(prof.termination) << "</text>\n";
    os << "</svg>\n";
}

} // namespace vss
