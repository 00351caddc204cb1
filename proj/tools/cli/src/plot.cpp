#include "autowu_cli/commands.hpp"

#include "autowu/error.hpp"
#include "autowu/experiment_log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace autowu::cli {

namespace {

namespace fs = std::filesystem;

using Row = std::map<std::string, std::string>;

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::vector<Row> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IOFailure("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw MissingLog(path.string() + " is empty");
    const auto header = split(line);
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        Row row;
        for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<double> number(const Row& row, const std::string& key) {
    const auto it = row.find(key);
    if (it == row.end() || it->second.empty()) return std::nullopt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// 1-2-5 tick spacing covering [lo, hi] with roughly `target` ticks.
std::vector<double> ticks(double lo, double hi, int target = 5) {
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
        out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return out;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

class Svg {
public:
    Svg(double width, double height) : width_(width), height_(height) {}

    void line(double x1, double y1, double x2, double y2, const std::string& style) {
        body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" style=\""
              << style << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
        if (pts.empty()) return;
        body_ << "<polyline fill=\"none\" style=\"" << style << "\" points=\"";
        for (const auto& [x, y] : pts) body_ << x << ',' << y << ' ';
        body_ << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\""
              << fill << "\" stroke=\"white\"/>\n";
    }
    void text(double x, double y, const std::string& s, const std::string& anchor = "middle", int size = 12) {
        body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size << "\" text-anchor=\"" << anchor
              << "\" font-family=\"sans-serif\">" << s << "</text>\n";
    }
    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
            << "\" viewBox=\"0 0 " << width_ << ' ' << height_ << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

private:
    double width_;
    double height_;
    std::ostringstream body_;
};

// Axes box mapping data coordinates into a fixed plot area.
struct Frame {
    double x0 = 70, y0 = 40, w = 560, h = 300;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

    double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
    double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }

    void draw(Svg& svg, const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
        svg.line(x0, y0 + h, x0 + w, y0 + h, "stroke:black");
        svg.line(x0, y0, x0, y0 + h, "stroke:black");
        for (double t : ticks(xmin, xmax)) {
            svg.line(px(t), y0 + h, px(t), y0 + h + 5, "stroke:black");
            svg.text(px(t), y0 + h + 18, tick_label(t));
        }
        for (double t : ticks(ymin, ymax)) {
            svg.line(x0 - 5, py(t), x0, py(t), "stroke:black");
            svg.line(x0, py(t), x0 + w, py(t), "stroke:#e0e0e0");
            svg.text(x0 - 8, py(t) + 4, tick_label(t), "end");
        }
        svg.text(x0 + w / 2, 24, title, "middle", 14);
        svg.text(x0 + w / 2, y0 + h + 38, xlabel);
        svg.text(16, y0 + h / 2, ylabel, "middle");
    }
};

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOFailure("cannot open " + path.string() + " for writing");
    out << text;
    if (!out.flush()) throw IOFailure("failed writing " + path.string());
}

std::pair<double, double> padded_range(const std::vector<double>& v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

// lr.svg and loss.svg for one run directory.
void plot_run(const fs::path& dir, const fs::path& out) {
    const auto rows = read_csv(dir / "steps.csv");
    if (rows.empty()) throw MissingLog(dir.string() + "/steps.csv has no rows");
    std::vector<double> steps, lrs, losses;
    std::vector<std::size_t> epochs;
    std::optional<double> switch_step;
    std::string prev_phase;
    for (const auto& r : rows) {
        const auto s = number(r, "step");
        const auto lr = number(r, "lr");
        const auto loss = number(r, "train_loss");
        const auto ep = number(r, "epoch");
        if (!s || !lr || !ep) continue;
        const std::string phase = r.count("phase") ? r.at("phase") : "";
        if (!prev_phase.empty() && phase != prev_phase && !switch_step) switch_step = *s;
        prev_phase = phase;
        steps.push_back(*s);
        lrs.push_back(*lr);
        losses.push_back(loss && std::isfinite(*loss) ? *loss : NAN);
        epochs.push_back(static_cast<std::size_t>(*ep));
    }
    if (steps.empty()) throw MissingLog(dir.string() + "/steps.csv has no readable rows");
    fs::create_directories(out);

    {
        Svg svg(660, 400);
        Frame f;
        f.xmin = 0;
        f.xmax = std::max(steps.back(), 1.0);
        f.ymin = 0;
        f.ymax = *std::max_element(lrs.begin(), lrs.end()) * 1.05;
        if (!(f.ymax > 0)) f.ymax = 1;
        f.draw(svg, "learning rate", "step", "lr");
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < steps.size(); ++i) pts.emplace_back(f.px(steps[i]), f.py(lrs[i]));
        svg.polyline(pts, "stroke:#1f77b4;stroke-width:1.5");
        if (switch_step) {
            svg.line(f.px(*switch_step), f.y0, f.px(*switch_step), f.y0 + f.h, "stroke:#d62728;stroke-dasharray:5,4");
            svg.text(f.px(*switch_step) + 4, f.y0 + 12, "switch @ " + tick_label(*switch_step), "start");
        }
        write_file(out / "lr.svg", svg.str());
    }
    {
        std::vector<double> finite;
        for (double l : losses) {
            if (std::isfinite(l)) finite.push_back(l);
        }
        if (finite.empty()) finite.push_back(0.0);
        Svg svg(660, 400);
        Frame f;
        f.xmin = 0;
        f.xmax = std::max(steps.back(), 1.0);
        std::tie(f.ymin, f.ymax) = padded_range(finite);
        f.draw(svg, "training loss", "step", "loss");
        std::vector<std::pair<double, double>> raw;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (std::isfinite(losses[i])) raw.emplace_back(f.px(steps[i]), f.py(losses[i]));
        }
        svg.polyline(raw, "stroke:#aec7e8;stroke-width:0.8");
        // Per-epoch mean, drawn at the epoch's middle step.
        std::vector<std::pair<double, double>> smooth;
        for (std::size_t i = 0; i < steps.size();) {
            std::size_t j = i;
            double sum = 0.0;
            std::size_t n = 0;
            while (j < steps.size() && epochs[j] == epochs[i]) {
                if (std::isfinite(losses[j])) {
                    sum += losses[j];
                    ++n;
                }
                ++j;
            }
            if (n > 0) smooth.emplace_back(f.px(0.5 * (steps[i] + steps[j - 1])), f.py(sum / static_cast<double>(n)));
            i = j;
        }
        svg.polyline(smooth, "stroke:#1f77b4;stroke-width:2");
        if (switch_step) {
            svg.line(f.px(*switch_step), f.y0, f.px(*switch_step), f.y0 + f.h, "stroke:#d62728;stroke-dasharray:5,4");
        }
        write_file(out / "loss.svg", svg.str());
    }
}

std::string heat_color(double t) {
    // Light yellow (low loss) to dark red (high loss).
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(255 - 100 * t);
    const int g = static_cast<int>(240 - 220 * t);
    const int b = static_cast<int>(170 - 150 * t);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

void plot_sweep(const fs::path& dir, const fs::path& out) {
    const auto rows = read_csv(dir / "sweep_summary.csv");
    if (rows.empty()) throw MissingLog(dir.string() + "/sweep_summary.csv has no rows");
    std::vector<double> peaks, warmups;
    for (const auto& r : rows) {
        if (auto p = number(r, "peak_lr")) peaks.push_back(*p);
        if (auto w = number(r, "warmup_epochs")) warmups.push_back(*w);
    }
    std::sort(peaks.begin(), peaks.end());
    peaks.erase(std::unique(peaks.begin(), peaks.end()), peaks.end());
    std::sort(warmups.begin(), warmups.end());
    warmups.erase(std::unique(warmups.begin(), warmups.end()), warmups.end());

    std::vector<double> finite;
    for (const auto& r : rows) {
        if (auto l = number(r, "final_eval_loss"); l && std::isfinite(*l)) finite.push_back(*l);
    }
    const double lo = finite.empty() ? 0.0 : *std::min_element(finite.begin(), finite.end());
    const double hi = finite.empty() ? 1.0 : *std::max_element(finite.begin(), finite.end());

    const double cell_w = 90, cell_h = 40, left = 90, top = 50;
    Svg svg(left + cell_w * static_cast<double>(warmups.size()) + 30, top + cell_h * static_cast<double>(peaks.size()) + 60);
    svg.text(left + cell_w * static_cast<double>(warmups.size()) / 2, 24, "final loss by (peak lr, warmup epochs)",
             "middle", 14);
    for (const auto& r : rows) {
        const auto p = number(r, "peak_lr");
        const auto w = number(r, "warmup_epochs");
        if (!p || !w) continue;
        const auto col = static_cast<double>(std::find(warmups.begin(), warmups.end(), *w) - warmups.begin());
        const auto row = static_cast<double>(std::find(peaks.begin(), peaks.end(), *p) - peaks.begin());
        const double x = left + col * cell_w;
        const double y = top + row * cell_h;
        const auto loss = number(r, "final_eval_loss");
        if (loss && std::isfinite(*loss)) {
            svg.rect(x, y, cell_w, cell_h, heat_color(hi > lo ? (*loss - lo) / (hi - lo) : 0.0));
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4g", *loss);
            svg.text(x + cell_w / 2, y + cell_h / 2 + 4, buf);
        } else {
            svg.rect(x, y, cell_w, cell_h, "#bbbbbb");
            svg.text(x + cell_w / 2, y + cell_h / 2 + 4, r.count("status") ? r.at("status") : "missing");
        }
    }
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        svg.text(left - 8, top + (static_cast<double>(i) + 0.5) * cell_h + 4, tick_label(peaks[i]), "end");
    }
    for (std::size_t j = 0; j < warmups.size(); ++j) {
        svg.text(left + (static_cast<double>(j) + 0.5) * cell_w, top + cell_h * static_cast<double>(peaks.size()) + 18,
                 tick_label(warmups[j]));
    }
    svg.text(left + cell_w * static_cast<double>(warmups.size()) / 2,
             top + cell_h * static_cast<double>(peaks.size()) + 40, "warmup epochs");
    svg.text(16, top - 10, "peak lr", "start");
    fs::create_directories(out);
    write_file(out / "sweep_heatmap.svg", svg.str());
}

} // namespace

int cmd_plot(const PlotOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        if (!fs::is_directory(opts.in)) throw MissingLog(opts.in.string() + " is not a directory");
        std::size_t written = 0;
        if (fs::exists(opts.in / "sweep_summary.csv")) {
            plot_sweep(opts.in, opts.out);
            out << (opts.out / "sweep_heatmap.svg").string() << '\n';
            ++written;
        }
        if (fs::exists(opts.in / "steps.csv")) {
            plot_run(opts.in, opts.out);
            out << (opts.out / "lr.svg").string() << '\n' << (opts.out / "loss.svg").string() << '\n';
            ++written;
        }
        std::vector<fs::path> subdirs;
        for (const auto& entry : fs::directory_iterator(opts.in)) {
            if (entry.is_directory() && fs::exists(entry.path() / "steps.csv")) subdirs.push_back(entry.path());
        }
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& sub : subdirs) {
            plot_run(sub, opts.out / sub.filename());
            out << (opts.out / sub.filename()).string() << '\n';
            ++written;
        }
        if (written == 0) throw MissingLog("no steps.csv or sweep_summary.csv under " + opts.in.string());
        return kSuccess;
    } catch (const IOFailure& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

} // namespace autowu::cli
