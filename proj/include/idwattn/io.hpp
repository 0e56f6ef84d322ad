#pragma once

#include "idwattn/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace idw {

/// Shortest-exact formatting (%.17g): the printed string parses back to the
/// identical double, which is what the byte-identical-output contracts need.
std::string fmt_double(double v);
double parse_double(const std::string& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<unsigned char> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const std::vector<unsigned char>& bytes);

void append_le_double(std::vector<unsigned char>& out, double v);
double read_le_double(const unsigned char* p);

std::vector<std::string> split(const std::string& s, char sep);

/// Binary PGM (P5), one byte per pixel.
void write_pgm(const std::string& path, std::size_t width, std::size_t height,
               const std::vector<unsigned char>& pixels);
struct Pgm {
    std::size_t width = 0, height = 0;
    std::vector<unsigned char> pixels;
};
Pgm read_pgm(const std::string& path);

} // namespace idw
