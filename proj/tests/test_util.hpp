#pragma once

#include <string>

#include "doctest.h"
#include "palg/error.hpp"
#include "palg/vlm.hpp"

namespace testutil {

template <typename F>
palg::ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const palg::Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return palg::ErrorKind::Contract;
}

template <typename F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const palg::Error& e) {
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

// Vocabulary whose rows are the given vectors, named t0, t1, ...
inline palg::TextModel model_from_rows(const palg::Matrix& rows) {
  palg::TextModel m;
  m.vocab.embeddings = rows;
  for (std::size_t i = 0; i < rows.rows(); ++i) m.vocab.token_names.push_back("t" + std::to_string(i));
  m.encoder = palg::TextEncoder::identity();
  return m;
}

}  // namespace testutil
