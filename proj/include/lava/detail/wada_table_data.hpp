// Generated by tools/gen_wada_table.py. Do not edit.
#pragma once

#include <array>
#include <utility>

namespace lava::detail {

// (G statistic, SNR dB) for Gamma(0.4) speech plus Gaussian noise.
inline constexpr std::array<std::pair<double, double>, 100> kWadaGammaTable{{
    {0.4094347001, -20.000000},
    {0.4094662776, -18.787879},
    {0.4095193718, -17.575758},
    {0.4096077529, -16.363636},
    {0.4097531154, -15.151515},
    {0.4099888405, -13.939394},
    {0.4103649164, -12.727273},
    {0.4109539418, -11.515152},
    {0.4118578253, -10.303030},
    {0.4132143799, -9.090909},
    {0.4152025808, -7.878788},
    {0.4180449271, -6.666667},
    {0.4220052908, -5.454545},
    {0.4273809654, -4.242424},
    {0.4344883930, -3.030303},
    {0.4436431610, -1.818182},
    {0.4551360953, -0.606061},
    {0.4692083254, 0.606061},
    {0.4860287504, 1.818182},
    {0.5056771757, 3.030303},
    {0.5281355286, 4.242424},
    {0.5532881753, 5.454545},
    {0.5809308393, 6.666667},
    {0.6107863153, 7.878788},
    {0.6425243896, 9.090909},
    {0.6757831942, 10.303030},
    {0.7101895632, 11.515152},
    {0.7453766299, 12.727273},
    {0.7809976744, 13.939394},
    {0.8167359299, 15.151515},
    {0.8523105857, 16.363636},
    {0.8874795419, 17.575758},
    {0.9220396172, 18.787879},
    {0.9558249180, 20.000000},
    {0.9887040033, 21.212121},
    {1.0205763656, 22.424242},
    {1.0513686256, 23.636364},
    {1.0810307225, 24.848485},
    {1.1095322883, 26.060606},
    {1.1368593170, 27.272727},
    {1.1630111856, 28.484848},
    {1.1879980434, 29.696970},
    {1.2118385636, 30.909091},
    {1.2345580315, 32.121212},
    {1.2561867399, 33.333333},
    {1.2767586544, 34.545455},
    {1.2963103165, 35.757576},
    {1.3148799468, 36.969697},
    {1.3325067222, 38.181818},
    {1.3492301961, 39.393939},
    {1.3650898397, 40.606061},
    {1.3801246832, 41.818182},
    {1.3943730389, 43.030303},
    {1.4078722921, 44.242424},
    {1.4206587465, 45.454545},
    {1.4327675142, 46.666667},
    {1.4442324415, 47.878788},
    {1.4550860633, 49.090909},
    {1.4653595806, 50.303030},
    {1.4750828554, 51.515152},
    {1.4842844198, 52.727273},
    {1.4929914967, 53.939394},
    {1.5012300275, 55.151515},
    {1.5090247068, 56.363636},
    {1.5163990212, 57.575758},
    {1.5233752910, 58.787879},
    {1.5299747142, 60.000000},
    {1.5362174116, 61.212121},
    {1.5421224718, 62.424242},
    {1.5477079969, 63.636364},
    {1.5529911467, 64.848485},
    {1.5579881830, 66.060606},
    {1.5627145123, 67.272727},
    {1.5671847272, 68.484848},
    {1.5714126465, 69.696970},
    {1.5754113543, 70.909091},
    {1.5791932366, 72.121212},
    {1.5827700175, 73.333333},
    {1.5861527930, 74.545455},
    {1.5893520635, 75.757576},
    {1.5923777653, 76.969697},
    {1.5952392998, 78.181818},
    {1.5979455619, 79.393939},
    {1.6005049667, 80.606061},
    {1.6029254752, 81.818182},
    {1.6052146182, 83.030303},
    {1.6073795194, 84.242424},
    {1.6094269175, 85.454545},
    {1.6113631860, 86.666667},
    {1.6131943540, 87.878788},
    {1.6149261235, 89.090909},
    {1.6165638880, 90.303030},
    {1.6181127485, 91.515152},
    {1.6195775297, 92.727273},
    {1.6209627945, 93.939394},
    {1.6222728586, 95.151515},
    {1.6235118035, 96.363636},
    {1.6246834894, 97.575758},
    {1.6257915670, 98.787879},
    {1.6268394892, 100.000000}
}};

} // namespace lava::detail
