#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedpmg/image.hpp"
#include "fedpmg/model.hpp"

namespace fedpmg {

// On-disk/wire tensor: f32 little-endian row-major with a small header.
// Layout: "FPMG" | version u8=1 | dtype u8=1 (f32) | ndim u8 | pad u8=0 |
//         ndim x u32 LE dims | payload.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

std::size_t tensor_byte_size(const Tensor& t);
std::size_t tensor_byte_size(const std::vector<std::uint32_t>& dims);

std::vector<std::uint8_t> serialize_tensor(const Tensor& t);
// Reads one tensor starting at *offset, advancing it; FormatError on bad
// magic, bad version/dtype, or truncation.
Tensor deserialize_tensor(const std::vector<std::uint8_t>& buf, std::size_t* offset);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

Tensor tensor_from_image(const Image2D& img);
Image2D image_from_tensor(const Tensor& t);
Tensor tensor_from_amplitude(const AmplitudeSpectrum& amp);
AmplitudeSpectrum amplitude_from_tensor(const Tensor& t);

// Checkpoint = in_ch tag tensor (one element) followed by the flat
// parameter vector, both in the format above, concatenated in one file.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);
std::vector<std::uint8_t> serialize_params(const ModelParams& params);
ModelParams deserialize_params(const std::vector<std::uint8_t>& buf);

// Binary PGM (P5), maxval 255, [0,1] mapped linearly with half-up rounding.
void export_pgm(const Image2D& img, const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace fedpmg
