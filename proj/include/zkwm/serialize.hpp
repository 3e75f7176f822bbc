#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace zkwm {

using Digest = std::array<uint8_t, 32>;

std::string digest_hex(const Digest& d);

/// Incremental SHA-256 (OpenSSL EVP underneath).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const uint8_t* data, size_t len);
  Digest finish();

 private:
  void* ctx_;
};

Digest sha256(std::span<const uint8_t> data);

/// Byte sink; concrete targets accumulate to memory and/or a running hash.
class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write(const uint8_t* data, size_t len) = 0;

  void u8(uint8_t v) { write(&v, 1); }
  void u32(uint32_t v);   // little-endian
  void u64(uint64_t v);   // little-endian
  void bytes(std::span<const uint8_t> b) { write(b.data(), b.size()); }
  void str(std::string_view s);  // u64 length + raw bytes
};

class VectorSink final : public ByteSink {
 public:
  void write(const uint8_t* data, size_t len) override {
    buf_.insert(buf_.end(), data, data + len);
  }
  const std::vector<uint8_t>& buffer() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

/// Hashes everything written; optionally forwards to an inner sink.
class HashingSink final : public ByteSink {
 public:
  explicit HashingSink(ByteSink* inner = nullptr) : inner_(inner) {}
  void write(const uint8_t* data, size_t len) override {
    hash_.update(data, len);
    if (inner_) inner_->write(data, len);
  }
  Digest finish() { return hash_.finish(); }

 private:
  Sha256 hash_;
  ByteSink* inner_;
};

/// Bounds-checked reader over a byte span; throws MalformedFileError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}
  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  std::span<const uint8_t> bytes(size_t len);
  std::string str();
  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> data);

}  // namespace zkwm
