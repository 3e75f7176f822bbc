#include "zkwm/serialize.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>

#include "zkwm/errors.hpp"

namespace zkwm {

std::string digest_hex(const Digest& d) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (uint8_t b : d) {
    s += digits[b >> 4];
    s += digits[b & 0xf];
  }
  return s;
}

Sha256::Sha256() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  ctx_ = ctx;
}

Sha256::~Sha256() { EVP_MD_CTX_free((EVP_MD_CTX*)ctx_); }

void Sha256::update(const uint8_t* data, size_t len) {
  EVP_DigestUpdate((EVP_MD_CTX*)ctx_, data, len);
}

Digest Sha256::finish() {
  Digest d{};
  unsigned int len = 0;
  EVP_DigestFinal_ex((EVP_MD_CTX*)ctx_, d.data(), &len);
  return d;
}

Digest sha256(std::span<const uint8_t> data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.finish();
}

void ByteSink::u32(uint32_t v) {
  uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = (uint8_t)(v >> (8 * i));
  write(b, 4);
}

void ByteSink::u64(uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = (uint8_t)(v >> (8 * i));
  write(b, 8);
}

void ByteSink::str(std::string_view s) {
  u64(s.size());
  write((const uint8_t*)s.data(), s.size());
}

uint8_t ByteReader::u8() {
  if (pos_ + 1 > data_.size()) throw MalformedFileError("truncated input");
  return data_[pos_++];
}

uint32_t ByteReader::u32() {
  if (pos_ + 4 > data_.size()) throw MalformedFileError("truncated input");
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
  pos_ += 4;
  return v;
}

uint64_t ByteReader::u64() {
  if (pos_ + 8 > data_.size()) throw MalformedFileError("truncated input");
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
  pos_ += 8;
  return v;
}

std::span<const uint8_t> ByteReader::bytes(size_t len) {
  if (pos_ + len > data_.size()) throw MalformedFileError("truncated input");
  auto s = data_.subspan(pos_, len);
  pos_ += len;
  return s;
}

std::string ByteReader::str() {
  uint64_t len = u64();
  if (len > remaining()) throw MalformedFileError("truncated string");
  auto b = bytes(len);
  return std::string((const char*)b.data(), b.size());
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedFileError("cannot open " + path);
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, std::span<const uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MalformedFileError("cannot open " + path + " for writing");
  out.write((const char*)data.data(), (std::streamsize)data.size());
  if (!out) throw MalformedFileError("short write to " + path);
}

}  // namespace zkwm
