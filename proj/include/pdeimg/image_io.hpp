#ifndef PDEIMG_IMAGE_IO_HPP
#define PDEIMG_IMAGE_IO_HPP

#include "errors.hpp"
#include "field.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace pdeimg
{

// 8-bit rasters map to [0,1] by v/255 on read and round(clamp(v)*255) on write.

enum class PgmVariant
{
  P2, // ASCII
  P5  // binary
};

/// Multi-channel raster; one Field per channel (1 = gray, 3 = RGB).
struct Image
{
  std::vector<Field> channels;

  int width() const { return channels.at(0).width(); }
  int height() const { return channels.at(0).height(); }
  bool is_gray() const { return channels.size() == 1; }
};

inline std::uint8_t quantize(double v) noexcept
{
  return static_cast<std::uint8_t>(std::lround(std::min(1.0, std::max(0.0, v)) * 255.0));
}

inline double dequantize(int v) noexcept { return static_cast<double>(v) / 255.0; }

/// Rounds every value to the nearest 8-bit level (what a write/read round trip yields).
inline Field quantize_field(Field f)
{
  for (double& v : f.values())
    v = dequantize(quantize(v));
  return f;
}

namespace detail
{

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Netpbm header reader; skips whitespace and '#' comments.
class PnmCursor
{
public:
  explicit PnmCursor(const std::string& bytes) : s_(bytes) {}

  std::string token()
  {
    skip_space();
    std::string t;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != '#')
      t += s_[pos_++];
    if (t.empty())
      throw IoError("pnm: unexpected end of header");
    return t;
  }

  int integer()
  {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw IoError("pnm: expected integer, got '" + t + "'");
    try
    {
      return std::stoi(t);
    }
    catch (const std::exception&)
    {
      throw IoError("pnm: integer out of range '" + t + "'");
    }
  }

  /// Binary payload starts after exactly one whitespace byte following maxval.
  std::size_t payload_offset()
  {
    if (pos_ >= s_.size() || !std::isspace(static_cast<unsigned char>(s_[pos_])))
      throw IoError("pnm: missing whitespace before binary payload");
    return pos_ + 1;
  }

private:
  void skip_space()
  {
    while (pos_ < s_.size())
    {
      if (s_[pos_] == '#')
        while (pos_ < s_.size() && s_[pos_] != '\n')
          ++pos_;
      else if (std::isspace(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      else
        break;
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Reads P2/P5 (gray) and P3/P6 (RGB) netpbm files with maxval <= 255.
inline Image read_pnm(const std::filesystem::path& path)
{
  const std::string bytes = detail::read_file(path);
  detail::PnmCursor cur(bytes);
  const std::string magic = cur.token();
  if (magic != "P2" && magic != "P5" && magic != "P3" && magic != "P6")
    throw IoError("pnm: unsupported magic '" + magic + "' in " + path.string());
  const int width = cur.integer();
  const int height = cur.integer();
  const int maxval = cur.integer();
  if (width <= 0 || height <= 0)
    throw IoError("pnm: non-positive dimensions in " + path.string());
  if (maxval <= 0 || maxval > 255)
    throw IoError("pnm: only 8-bit maxval is supported in " + path.string());

  const int nch = (magic == "P3" || magic == "P6") ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * nch;
  std::vector<int> raw(count);
  if (magic == "P5" || magic == "P6")
  {
    const std::size_t off = cur.payload_offset();
    if (bytes.size() < off + count)
      throw IoError("pnm: truncated payload in " + path.string());
    for (std::size_t k = 0; k < count; ++k)
      raw[k] = static_cast<unsigned char>(bytes[off + k]);
  }
  else
  {
    for (std::size_t k = 0; k < count; ++k)
    {
      int v = 0;
      try
      {
        v = cur.integer();
      }
      catch (const IoError&)
      {
        throw IoError("pnm: truncated or malformed ASCII payload in " + path.string());
      }
      raw[k] = v;
    }
  }

  Image img;
  for (int c = 0; c < nch; ++c)
    img.channels.emplace_back(width, height);
  for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p)
    for (int c = 0; c < nch; ++c)
    {
      const int v = raw[p * nch + c];
      if (v > maxval)
        throw IoError("pnm: sample exceeds maxval in " + path.string());
      img.channels[c].values()[p] = maxval == 255 ? dequantize(v)
                                                  : static_cast<double>(v) / maxval;
    }
  return img;
}

inline Field read_pgm(const std::filesystem::path& path)
{
  Image img = read_pnm(path);
  if (!img.is_gray())
    throw IoError("expected a grayscale image: " + path.string());
  return std::move(img.channels.front());
}

namespace detail
{

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace detail

/// `comment` lines (if any) are emitted as '#' header comments.
inline void write_pnm(const Image& img, const std::filesystem::path& path,
                      PgmVariant variant = PgmVariant::P5, const std::string& comment = {})
{
  const int nch = static_cast<int>(img.channels.size());
  if (nch != 1 && nch != 3)
    throw IoError("pnm: only 1 or 3 channels can be written");
  for (const Field& c : img.channels)
    img.channels.front().require_same_shape(c);
  const bool ascii = variant == PgmVariant::P2;
  std::string magic = nch == 1 ? (ascii ? "P2" : "P5") : (ascii ? "P3" : "P6");

  std::ostringstream out;
  out << magic << '\n';
  if (!comment.empty())
  {
    std::istringstream lines(comment);
    for (std::string line; std::getline(lines, line);)
      out << "# " << line << '\n';
  }
  out << img.width() << ' ' << img.height() << '\n' << 255 << '\n';
  const std::size_t npix = static_cast<std::size_t>(img.width()) * img.height();
  std::string body;
  body.reserve(npix * nch * (ascii ? 4 : 1));
  for (std::size_t p = 0; p < npix; ++p)
    for (int c = 0; c < nch; ++c)
    {
      const std::uint8_t q = quantize(img.channels[c].values()[p]);
      if (ascii)
      {
        body += std::to_string(q);
        body += ((p + 1) % static_cast<std::size_t>(img.width()) == 0 && c == nch - 1) ? '\n' : ' ';
      }
      else
        body += static_cast<char>(q);
    }
  detail::write_bytes(path, out.str() + body);
}

inline void write_pgm(const Field& f, const std::filesystem::path& path,
                      PgmVariant variant = PgmVariant::P5, const std::string& comment = {})
{
  write_pnm(Image{{f}}, path, variant, comment);
}

// ---------------------------------------------------------------------------
// PNG via libpng (8-bit gray/RGB; alpha dropped, palette and 16-bit expanded/stripped)
// ---------------------------------------------------------------------------

inline Image read_png(const std::filesystem::path& path)
{
  png_image im{};
  im.version = PNG_IMAGE_VERSION;
  const std::string bytes = detail::read_file(path);
  if (!png_image_begin_read_from_memory(&im, bytes.data(), bytes.size()))
    throw IoError("png: " + std::string(im.message) + " in " + path.string());
  const bool color = (im.format & PNG_FORMAT_FLAG_COLOR) != 0;
  im.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, buf.data(), 0, nullptr))
  {
    const std::string msg = im.message;
    png_image_free(&im);
    throw IoError("png: " + msg + " in " + path.string());
  }
  const int nch = color ? 3 : 1;
  const int w = static_cast<int>(im.width), h = static_cast<int>(im.height);
  Image img;
  for (int c = 0; c < nch; ++c)
    img.channels.emplace_back(w, h);
  for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p)
    for (int c = 0; c < nch; ++c)
      img.channels[c].values()[p] = dequantize(buf[p * nch + c]);
  return img;
}

inline void write_png(const Image& img, const std::filesystem::path& path)
{
  const int nch = static_cast<int>(img.channels.size());
  if (nch != 1 && nch != 3)
    throw IoError("png: only 1 or 3 channels can be written");
  png_image im{};
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width());
  im.height = static_cast<png_uint_32>(img.height());
  im.format = nch == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t npix = static_cast<std::size_t>(img.width()) * img.height();
  std::vector<png_byte> buf(npix * nch);
  for (std::size_t p = 0; p < npix; ++p)
    for (int c = 0; c < nch; ++c)
      buf[p * nch + c] = quantize(img.channels[c].values()[p]);
  if (!png_image_write_to_file(&im, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("png: " + std::string(im.message) + " writing " + path.string());
}

inline std::string lower_extension(const std::filesystem::path& path)
{
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

/// Dispatches on extension: .png via libpng, anything else as netpbm.
inline Image read_image(const std::filesystem::path& path)
{
  if (!std::filesystem::exists(path))
    throw IoError("no such file: " + path.string());
  return lower_extension(path) == ".png" ? read_png(path) : read_pnm(path);
}

inline void write_image(const Image& img, const std::filesystem::path& path,
                        PgmVariant variant = PgmVariant::P5, const std::string& comment = {})
{
  if (lower_extension(path) == ".png")
    write_png(img, path);
  else
    write_pnm(img, path, variant, comment);
}

} // namespace pdeimg

#endif
