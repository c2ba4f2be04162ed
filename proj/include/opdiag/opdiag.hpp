#ifndef OPDIAG_OPDIAG_HPP
#define OPDIAG_OPDIAG_HPP

#include "opdiag/algebra.hpp"
#include "opdiag/certify.hpp"
#include "opdiag/cohomology.hpp"
#include "opdiag/config.hpp"
#include "opdiag/diagonal.hpp"
#include "opdiag/errors.hpp"
#include "opdiag/linalg.hpp"
#include "opdiag/norms.hpp"
#include "opdiag/wedderburn.hpp"

#endif
