#pragma once

// Minimax rational coefficients for exp/log (Cephes expd/logd scheme). Both
// the scalar reference and the SIMD variants evaluate these with the same
// FMA-based Horner ordering so their elementwise results match bit for bit.
namespace rmd::kernels::detail {

inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;

inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;

inline constexpr double kExpC1 = 6.93145751953125e-1;          // ln2 high part
inline constexpr double kExpC2 = 1.42860682030941723212e-6;    // ln2 low part
inline constexpr double kLog2E = 1.4426950408889634073599;

// exp() saturation: inputs below kExpLow flush to 0 (true value subnormal),
// inputs above kExpHigh return +inf.
inline constexpr double kExpLow = -708.396418532264106224;
inline constexpr double kExpHigh = 709.0;

inline constexpr double kLogP0 = 1.01875663804580931796e-4;
inline constexpr double kLogP1 = 4.97494994976747001425e-1;
inline constexpr double kLogP2 = 4.70579119878881725854e0;
inline constexpr double kLogP3 = 1.44989225341610930846e1;
inline constexpr double kLogP4 = 1.79368678507819816313e1;
inline constexpr double kLogP5 = 7.70838733755885391666e0;

inline constexpr double kLogQ0 = 1.12873587189167450590e1;
inline constexpr double kLogQ1 = 4.52279145837532221105e1;
inline constexpr double kLogQ2 = 8.29875266912776603211e1;
inline constexpr double kLogQ3 = 7.11544750618563894466e1;
inline constexpr double kLogQ4 = 2.31251620126765340583e1;

inline constexpr double kSqrtHalf = 0.70710678118654752440;
inline constexpr double kLogC1 = 0.693359375;                  // ln2 high part
inline constexpr double kLogC2 = 2.121944400546905827679e-4;   // ln2 correction

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

}  // namespace rmd::kernels::detail
