#include "thermalcycle/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <jpeglib.h>

namespace thermalcycle {

namespace {

using Bytes = std::vector<unsigned char>;

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

Tensor from_interleaved(const unsigned char* rgb, int width, int height) {
  Tensor out(Shape{1, 3, height, width});
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) out[c * plane + i] = rgb[i * 3 + c] / 255.0f;
  }
  return out;
}

Tensor decode_png(const Bytes& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageError("corrupt PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Bytes rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw ImageError("corrupt PNG '" + path.string() + "': " + message);
  }
  return from_interleaved(rgb.data(), static_cast<int>(image.width), static_cast<int>(image.height));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Tensor decode_jpeg(const Bytes& bytes, const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.message[0] = '\0';
  Bytes rgb;
  int width = 0;
  int height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageError("corrupt JPEG '" + path.string() + "': " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  rgb.resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(rgb.data(), width, height);
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngMagic, kPngMagic + 8, bytes.begin())) return decode_png(bytes, path);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes, path);
  throw ImageError("'" + path.string() + "' is not a PNG or JPEG image");
}

void save_png(const Tensor& image, const std::filesystem::path& path) {
  const Shape s = image.shape();
  if (s.n != 1 || (s.c != 3 && s.c != 1)) throw ShapeError("save_png: expected 1x3xHxW or 1x1xHxW, got " + s.str());
  const std::size_t plane = s.plane();
  Bytes pixels(plane * s.c);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < s.c; ++c) {
      const float v = std::clamp(image[c * plane + i], 0.0f, 1.0f);
      pixels[i * s.c + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  }
  png_image out;
  std::memset(&out, 0, sizeof out);
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(s.w);
  out.height = static_cast<png_uint_32>(s.h);
  out.format = s.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw ImageError("cannot write PNG '" + path.string() + "': " + out.message);
  }
}

}  // namespace thermalcycle
