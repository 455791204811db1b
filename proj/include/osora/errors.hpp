// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace osora {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define OSORA_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(what) {}    \
    }

OSORA_DEFINE_ERROR(RankOutOfRange);
OSORA_DEFINE_ERROR(NonFiniteInput);
OSORA_DEFINE_ERROR(DimensionMismatch);
OSORA_DEFINE_ERROR(LengthMismatch);
OSORA_DEFINE_ERROR(MethodMismatch);
OSORA_DEFINE_ERROR(InvalidMethod);
OSORA_DEFINE_ERROR(NonFiniteLoss);
OSORA_DEFINE_ERROR(IoFailure);
OSORA_DEFINE_ERROR(DigestMismatch);
OSORA_DEFINE_ERROR(VersionUnsupported);
OSORA_DEFINE_ERROR(CorruptPayload);
OSORA_DEFINE_ERROR(ParseError);
OSORA_DEFINE_ERROR(UnknownPreset);

#undef OSORA_DEFINE_ERROR

}  // namespace osora
