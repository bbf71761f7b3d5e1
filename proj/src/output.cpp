#include "kacgame/output.hpp"

#include "kacgame/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace kacgame {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, mode);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    return out;
}

std::array<unsigned char, 3> ramp(double t)
{
    // Piecewise-linear approximation of viridis.
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double u = t - i;
    std::array<unsigned char, 3> c{};
    for (int k = 0; k < 3; ++k) {
        c[static_cast<std::size_t>(k)] = static_cast<unsigned char>(std::lround(stops[i][k] + u * (stops[i + 1][k] - stops[i][k])));
    }
    return c;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string fmt_num(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& content)
{
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << content;
}

void write_snapshot(const fs::path& path, double time, const DensityField& f)
{
    std::ostringstream os;
    const Grid& g = f.grid();
    os << "# time " << fmt_num(time) << '\n';
    os << "# dims " << g.n[0];
    if (g.dim == 2) {
        os << ' ' << g.n[1];
    }
    os << '\n';
    os << "# strategies " << f.num_strategies() << '\n';
    char buf[32];
    for (std::size_t v = 0; v < g.size(); ++v) {
        for (int i = 0; i < f.num_strategies(); ++i) {
            std::snprintf(buf, sizeof buf, "%.15e", f.at(i, v));
            os << (i > 0 ? " " : "") << buf;
        }
        os << '\n';
    }
    write_text(path, os.str());
}

Snapshot read_snapshot(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    }
    Snapshot s;
    std::string line;
    auto header = [&](const std::string& key) {
        if (!std::getline(in, line) || line.rfind("# " + key + " ", 0) != 0) {
            throw Error(ErrorKind::Io, path.string() + ": missing '# " + key + "' header");
        }
        return std::istringstream(line.substr(key.size() + 3));
    };
    header("time") >> s.time;
    auto dims = header("dims");
    int d = 0;
    while (dims >> d) {
        s.dims.push_back(d);
    }
    header("strategies") >> s.strategies;
    long expect = s.strategies;
    for (int x : s.dims) {
        expect *= x;
    }
    double v = 0.0;
    while (in >> v) {
        s.values.push_back(v);
    }
    if (static_cast<long>(s.values.size()) != expect) {
        throw Error(ErrorKind::Io, path.string() + ": expected " + std::to_string(expect) + " values");
    }
    return s;
}

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return os.str();
}

void write_heatmap_ppm(const fs::path& path, const std::vector<double>& values, int rows, int cols, double lo,
                       double hi)
{
    const int scale = std::max(1, 256 / std::max(rows, cols));
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << "P6\n" << cols * scale << ' ' << rows * scale << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    for (int r = rows - 1; r >= 0; --r) {
        for (int rep = 0; rep < scale; ++rep) {
            for (int c = 0; c < cols; ++c) {
                // Axis 0 runs horizontally, axis 1 upward.
                const auto px = ramp((values[static_cast<std::size_t>(c) * static_cast<std::size_t>(rows) +
                                             static_cast<std::size_t>(r)] - lo) / span);
                for (int k = 0; k < scale; ++k) {
                    out.write(reinterpret_cast<const char*>(px.data()), 3);
                }
            }
        }
    }
}

void write_line_plot_svg(const fs::path& path, const std::string& title, const std::string& xlabel,
                         const std::string& ylabel, const std::vector<Series>& series)
{
    const double W = 640, H = 420, ml = 60, mr = 150, mt = 36, mb = 48;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    if (x1 <= x0) {
        x1 = x0 + 1;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
       << "</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + t * (x1 - x0) / 4;
        const double yv = y0 + t * (y1 - y0) / 4;
        os << "<text x=\"" << sx(xv) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << fmt_num(std::round(xv * 1000) / 1000) << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
           << fmt_num(std::round(yv * 1000) / 1000) << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << xml_escape(xlabel) << "</text>\n";
    os << "<text x=\"14\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << (mt + H - mb) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = colors[k % 7];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                os << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
            }
        }
        os << "\"/>\n";
        const double ly = mt + 14 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - mr + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << xml_escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    write_text(path, os.str());
}

} // namespace kacgame
