#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace hfbkin::io {

inline constexpr const char *padding_note = "# convolutions: zero-padded outside the truncated lattice";

inline std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// "(n1:n2:n3)" label for column headers
inline std::string point_label(const LatticeGrid &g, std::size_t i)
{
    std::string s = "(";
    for (int a = 0; a < g.dim(); ++a)
        s += (a ? ":" : "") + std::to_string(g.n(i)[a]);
    return s + ")";
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path &path) : out_(path)
    {
        if (!out_)
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        out_ << padding_note << "\n";
    }

    void header(const std::vector<std::string> &cols) { row_strings(cols); }

    void row(const std::vector<double> &vals)
    {
        for (std::size_t i = 0; i < vals.size(); ++i)
            out_ << (i ? "," : "") << num(vals[i]);
        out_ << "\n";
    }

    void row_strings(const std::vector<std::string> &vals)
    {
        for (std::size_t i = 0; i < vals.size(); ++i)
            out_ << (i ? "," : "") << vals[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

// n1[,n2[,n3]],p1[,p2[,p3]],re,im in grid order
template <class T>
void write_field_csv(const std::filesystem::path &path, const LatticeField<T> &f)
{
    const LatticeGrid &g = *f.grid;
    CsvWriter w(path);
    std::vector<std::string> cols;
    for (int a = 0; a < g.dim(); ++a)
        cols.push_back("n" + std::to_string(a + 1));
    for (int a = 0; a < g.dim(); ++a)
        cols.push_back("p" + std::to_string(a + 1));
    cols.push_back("re");
    cols.push_back("im");
    w.header(cols);
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<std::string> r;
        for (int a = 0; a < g.dim(); ++a)
            r.push_back(std::to_string(g.n(i)[a]));
        for (int a = 0; a < g.dim(); ++a)
            r.push_back(num(g.p(i)[a]));
        const cplx v = f[i];
        r.push_back(num(v.real()));
        r.push_back(num(v.imag()));
        w.row_strings(r);
    }
}

// column names "<prefix>(n)" for every lattice point
inline std::vector<std::string> field_columns(const LatticeGrid &g, const std::string &prefix)
{
    std::vector<std::string> c;
    for (std::size_t i = 0; i < g.size(); ++i)
        c.push_back(prefix + point_label(g, i));
    return c;
}

} // namespace hfbkin::io
