#pragma once

#include "stabrkc/adaptive.hpp"
#include "stabrkc/chebyshev.hpp"
#include "stabrkc/format.hpp"
#include "stabrkc/harness.hpp"
#include "stabrkc/methods.hpp"
#include "stabrkc/problems.hpp"
#include "stabrkc/reference.hpp"
#include "stabrkc/stability.hpp"
#include "stabrkc/state.hpp"
