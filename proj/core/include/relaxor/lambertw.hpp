#pragma once

// Real Lambert W on the two real branches.

namespace relaxor {

enum class Branch { Principal, Lower };  // W0, W-1

const char* to_string(Branch b);

/// W_b(x) with w e^w = x. W0 needs x >= -1/e, W-1 needs -1/e <= x < 0.
double lambert_w(Branch b, double x);

/// W_b(-exp(-1 - s)) for s >= 0.
///
/// Every argument in [-1/e, 0) can be written this way, and s measures the
/// distance from the branch point without the cancellation that ex + 1
/// suffers. Callers that already know log(-x) should use this form.
double lambert_w_offset(Branch b, double s);

/// 1 + W_b(-exp(-1 - s)), accurate to full relative precision as s -> 0.
double lambert_w_offset_plus_one(Branch b, double s);

/// y - 1 - log(y), the offset s for which y = -lambert_w_offset(b, s).
double log_gap(double y);

}  // namespace relaxor
