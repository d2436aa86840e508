// Copyright 2026 The qsimnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qsimnet/errors.hpp"

namespace qsimnet {

using IndexId = int64_t;

/// Dense complex tensor with named indices.
///
/// `data` is row-major over `indices`: the entry for index values
/// (v_0, ..., v_{r-1}) lives at offset v_0 * dims[1]*...*dims[r-1] + ... +
/// v_{r-1}. A rank-0 tensor holds a single scalar. Index ids within one
/// tensor are distinct; every index of this artifact has dimension 2 but the
/// contraction code stays general.
struct Tensor {
  std::vector<IndexId> indices;
  std::vector<int> dims;
  std::vector<std::complex<double>> data;

  int rank() const { return static_cast<int>(indices.size()); }
  size_t size() const { return data.size(); }

  bool has_index(IndexId id) const {
    return std::find(indices.begin(), indices.end(), id) != indices.end();
  }

  int dim_of(IndexId id) const {
    for (size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] == id) return dims[i];
    }
    throw ContractError("index " + std::to_string(id) + " not in tensor");
  }

  std::complex<double> scalar() const {
    if (rank() != 0) throw ContractError("tensor is not rank 0");
    return data[0];
  }
};

inline Tensor make_tensor(std::vector<IndexId> indices, std::vector<int> dims,
                          std::vector<std::complex<double>> data) {
  if (indices.size() != dims.size()) {
    throw ContractError("index/dim count mismatch");
  }
  size_t expected = 1;
  for (int d : dims) {
    if (d <= 0) throw ContractError("non-positive dimension");
    expected *= static_cast<size_t>(d);
  }
  if (data.size() != expected) {
    throw ContractError("data length does not match dimensions");
  }
  for (size_t i = 0; i < indices.size(); ++i) {
    for (size_t j = i + 1; j < indices.size(); ++j) {
      if (indices[i] == indices[j]) {
        throw ContractError("duplicate index id in tensor");
      }
    }
  }
  return Tensor{std::move(indices), std::move(dims), std::move(data)};
}

inline Tensor make_scalar(std::complex<double> value) {
  return Tensor{{}, {}, {value}};
}

namespace detail {

/// Row-major strides of a tensor, per position.
inline std::vector<size_t> strides_of(const Tensor& t) {
  std::vector<size_t> s(t.dims.size());
  size_t acc = 1;
  for (size_t i = t.dims.size(); i-- > 0;) {
    s[i] = acc;
    acc *= static_cast<size_t>(t.dims[i]);
  }
  return s;
}

/// Stride of index `id` in tensor `t`, or 0 when absent.
inline size_t stride_in(const Tensor& t, const std::vector<size_t>& strides,
                        IndexId id) {
  for (size_t i = 0; i < t.indices.size(); ++i) {
    if (t.indices[i] == id) return strides[i];
  }
  return 0;
}

}  // namespace detail

/// General pairwise contraction: sums over `summed` (which must appear in
/// both operands with equal dimension) and keeps everything else. An index
/// shared by both operands but not summed survives once, diagonally (the
/// hyperedge case). Result index order: a's surviving indices in a's order,
/// then b's surviving indices not already present, in b's order.
///
/// Work is exactly (result entries) x (summed entries) complex multiply-adds,
/// i.e. 2^|union of indices| when all dimensions are 2.
inline Tensor contract_over(const Tensor& a, const Tensor& b,
                            const std::vector<IndexId>& summed) {
  for (IndexId id : summed) {
    if (!a.has_index(id) || !b.has_index(id)) {
      throw ContractError("summed index " + std::to_string(id) +
                          " missing from an operand");
    }
  }
  // Shared indices must agree on dimension whether summed or diagonal.
  for (IndexId id : a.indices) {
    if (b.has_index(id) && a.dim_of(id) != b.dim_of(id)) {
      throw ContractError("dimension conflict on index " + std::to_string(id));
    }
  }

  auto is_summed = [&](IndexId id) {
    return std::find(summed.begin(), summed.end(), id) != summed.end();
  };

  std::vector<IndexId> out_indices;
  std::vector<int> out_dims;
  for (size_t i = 0; i < a.indices.size(); ++i) {
    if (!is_summed(a.indices[i])) {
      out_indices.push_back(a.indices[i]);
      out_dims.push_back(a.dims[i]);
    }
  }
  for (size_t i = 0; i < b.indices.size(); ++i) {
    IndexId id = b.indices[i];
    if (!is_summed(id) &&
        std::find(out_indices.begin(), out_indices.end(), id) ==
            out_indices.end()) {
      out_indices.push_back(id);
      out_dims.push_back(b.dims[i]);
    }
  }

  size_t out_size = 1;
  for (int d : out_dims) out_size *= static_cast<size_t>(d);

  const auto a_strides = detail::strides_of(a);
  const auto b_strides = detail::strides_of(b);

  // Per result position: stride into a and b (0 when the index is absent).
  const size_t out_rank = out_indices.size();
  std::vector<size_t> oa(out_rank), ob(out_rank);
  for (size_t i = 0; i < out_rank; ++i) {
    oa[i] = detail::stride_in(a, a_strides, out_indices[i]);
    ob[i] = detail::stride_in(b, b_strides, out_indices[i]);
  }

  // Precompute all summed offset pairs once; the inner loop is a flat walk.
  size_t sum_size = 1;
  for (IndexId id : summed) sum_size *= static_cast<size_t>(a.dim_of(id));
  std::vector<std::pair<size_t, size_t>> sum_offsets;
  sum_offsets.reserve(sum_size);
  {
    std::vector<int> digit(summed.size(), 0);
    for (size_t k = 0; k < sum_size; ++k) {
      size_t off_a = 0, off_b = 0;
      for (size_t i = 0; i < summed.size(); ++i) {
        off_a += digit[i] * detail::stride_in(a, a_strides, summed[i]);
        off_b += digit[i] * detail::stride_in(b, b_strides, summed[i]);
      }
      sum_offsets.emplace_back(off_a, off_b);
      for (size_t i = summed.size(); i-- > 0;) {
        if (++digit[i] < a.dim_of(summed[i])) break;
        digit[i] = 0;
      }
    }
  }

  std::vector<std::complex<double>> out(out_size, {0.0, 0.0});
  std::vector<int> digit(out_rank, 0);
  size_t base_a = 0, base_b = 0;
  for (size_t r = 0; r < out_size; ++r) {
    std::complex<double> acc(0.0, 0.0);
    for (const auto& [da, db] : sum_offsets) {
      acc += a.data[base_a + da] * b.data[base_b + db];
    }
    out[r] = acc;
    // Odometer step over the result indices (amortized O(1)).
    for (size_t i = out_rank; i-- > 0;) {
      ++digit[i];
      base_a += oa[i];
      base_b += ob[i];
      if (digit[i] < out_dims[i]) break;
      base_a -= static_cast<size_t>(out_dims[i]) * oa[i];
      base_b -= static_cast<size_t>(out_dims[i]) * ob[i];
      digit[i] = 0;
    }
  }
  return Tensor{std::move(out_indices), std::move(out_dims), std::move(out)};
}

/// Contracts a pair over all shared indices: result indices are the
/// symmetric difference of the operands' indices. Disjoint operands give the
/// outer product (two scalars give a scalar product).
inline Tensor contract_pair(const Tensor& a, const Tensor& b) {
  std::vector<IndexId> shared;
  for (IndexId id : a.indices) {
    if (b.has_index(id)) shared.push_back(id);
  }
  return contract_over(a, b, shared);
}

/// Pins `index` to `value`, dropping it from the tensor. Rank decreases by
/// one; the other indices keep their relative order.
inline Tensor fix_index(const Tensor& t, IndexId index, int value) {
  if (!t.has_index(index)) {
    throw SliceError("index " + std::to_string(index) + " not in tensor");
  }
  if (value < 0 || value >= t.dim_of(index)) {
    throw SliceError("value out of range for index " + std::to_string(index));
  }
  size_t pos = 0;
  while (t.indices[pos] != index) ++pos;

  const auto strides = detail::strides_of(t);
  std::vector<IndexId> out_indices;
  std::vector<int> out_dims;
  for (size_t i = 0; i < t.indices.size(); ++i) {
    if (i == pos) continue;
    out_indices.push_back(t.indices[i]);
    out_dims.push_back(t.dims[i]);
  }
  size_t out_size = t.size() / static_cast<size_t>(t.dims[pos]);
  std::vector<std::complex<double>> out(out_size);

  std::vector<int> digit(out_indices.size(), 0);
  size_t src = static_cast<size_t>(value) * strides[pos];
  std::vector<size_t> src_strides;
  for (size_t i = 0; i < t.indices.size(); ++i) {
    if (i != pos) src_strides.push_back(strides[i]);
  }
  for (size_t r = 0; r < out_size; ++r) {
    out[r] = t.data[src];
    for (size_t i = out_indices.size(); i-- > 0;) {
      ++digit[i];
      src += src_strides[i];
      if (digit[i] < out_dims[i]) break;
      src -= static_cast<size_t>(out_dims[i]) * src_strides[i];
      digit[i] = 0;
    }
  }
  return Tensor{std::move(out_indices), std::move(out_dims), std::move(out)};
}

}  // namespace qsimnet
