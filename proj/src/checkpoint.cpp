#include "flowrl/checkpoint.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace flowrl::nn {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(buf, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t at = 0;

  void need(std::size_t n) const {
    if (at + n > buf.size())
      throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(at, n);
    at += n;
    return s;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

std::string parse_header(Reader& r) {
  const std::string magic = r.bytes(8);
  if (std::memcmp(magic.data(), kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic bytes");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));
  const std::uint32_t sig_len = r.u32();
  return r.bytes(sig_len);
}

void verify_crc(const std::string& data) {
  if (data.size() < 12) throw std::runtime_error("checkpoint: truncated file");
  const std::size_t body = data.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[body + i]))
              << (8 * i);
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
              static_cast<uInt>(body)));
  if (crc != stored)
    throw std::runtime_error("checkpoint: checksum mismatch (corrupt file)");
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& signature,
                     const std::vector<ParamTensor*>& tensors) {
  std::string buf;
  buf.append(kMagic, 8);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(signature.size()));
  buf.append(signature);
  put_u64(buf, tensors.size());
  for (const ParamTensor* p : tensors) {
    put_u32(buf, static_cast<std::uint32_t>(p->name.size()));
    buf.append(p->name);
    put_u64(buf, static_cast<std::uint64_t>(p->value.rows()));
    put_u64(buf, static_cast<std::uint64_t>(p->value.cols()));
    const double* data = p->value.data();  // column-major
    for (long i = 0; i < p->value.size(); ++i) put_f64(buf, data[i]);
  }
  const auto crc = static_cast<std::uint32_t>(::crc32(
      0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path,
                     const std::string& expected_signature,
                     const std::vector<ParamTensor*>& tensors) {
  const std::string data = read_file(path);
  verify_crc(data);
  Reader r{data};
  const std::string signature = parse_header(r);
  if (signature != expected_signature)
    throw std::runtime_error("checkpoint: architecture signature mismatch: file '" +
                             signature + "' vs expected '" + expected_signature + "'");

  std::map<std::string, Eigen::MatrixXd> loaded;
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const auto rows = static_cast<long>(r.u64());
    const auto cols = static_cast<long>(r.u64());
    if (rows < 0 || cols < 0 || rows * cols > (1L << 30))
      throw std::runtime_error("checkpoint: implausible tensor shape for " + name);
    Eigen::MatrixXd m(rows, cols);
    for (long k = 0; k < rows * cols; ++k) m.data()[k] = r.f64();
    loaded[name] = std::move(m);
  }

  for (ParamTensor* p : tensors) {
    auto it = loaded.find(p->name);
    if (it == loaded.end())
      throw std::runtime_error("checkpoint: missing tensor '" + p->name + "'");
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols())
      throw std::runtime_error(
          "checkpoint: shape mismatch for tensor '" + p->name + "': file " +
          std::to_string(it->second.rows()) + "x" +
          std::to_string(it->second.cols()) + " vs expected " +
          std::to_string(p->value.rows()) + "x" +
          std::to_string(p->value.cols()));
    p->value = it->second;
    p->zero_grad();
  }
}

std::string read_checkpoint_signature(const std::string& path) {
  const std::string data = read_file(path);
  verify_crc(data);
  Reader r{data};
  return parse_header(r);
}

}  // namespace flowrl::nn
