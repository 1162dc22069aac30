#pragma once

#include "netdecode/core.hpp"
#include "netdecode/csv.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace netdecode {

/// Minimal standalone-SVG builder: rectangles, lines, polylines, circles and
/// text, plus a linear axis mapper. Data points carry their source values as
/// data-x / data-y attributes so exported figures stay machine-readable.
class SvgDocument {
public:
    SvgDocument(double width, double height) : width_(width), height_(height) {}

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none", double opacity = 1.0) {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
              << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
              << "\"";
        if (opacity != 1.0) body_ << " fill-opacity=\"" << fmt(opacity) << "\"";
        body_ << "/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width = 1.0, bool dashed = false) {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
              << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(stroke_width) << "\"";
        if (dashed) body_ << " stroke-dasharray=\"5,4\"";
        body_ << "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double stroke_width = 1.5) {
        body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(stroke_width) << "\" points=\"";
        for (const auto& [x, y] : pts) body_ << fmt(x) << "," << fmt(y) << " ";
        body_ << "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill, double data_x,
                double data_y) {
        body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
              << "\" fill=\"" << fill << "\" data-x=\"" << format_double(data_x)
              << "\" data-y=\"" << format_double(data_y) << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 12.0,
              const std::string& fill = "#222", const std::string& anchor = "start") {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
              << "\" font-family=\"sans-serif\" fill=\"" << fill << "\" text-anchor=\"" << anchor
              << "\">" << escape(s) << "</text>\n";
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot write SVG: " + path.string());
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_)
            << "\" height=\"" << fmt(height_) << "\" viewBox=\"0 0 " << fmt(width_) << " "
            << fmt(height_) << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
    }

private:
    static std::string fmt(double v) { return format_double(v); }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            switch (c) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                default: out += c;
            }
        }
        return out;
    }

    double width_, height_;
    std::ostringstream body_;
};

/// Maps data coordinates onto an SVG plot area (y axis flipped).
struct AxisMapper {
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    double left = 50, top = 20, plot_w = 400, plot_h = 300;

    double x(double v) const {
        return left + (v - x_min) / span(x_max - x_min) * plot_w;
    }
    double y(double v) const {
        return top + plot_h - (v - y_min) / span(y_max - y_min) * plot_h;
    }

private:
    static double span(double s) { return s != 0.0 ? s : 1.0; }
};

} // namespace netdecode
