#include "nma/mrsa.hpp"

#include <sstream>

#include "nma/csv.hpp"

namespace nma {

const char* mrsa_csv_text() {
  static const char* text = R"CSV(
study_id,treatment,n,mean,sd,events,missing,year_c,pneumonia,confirmed
1,vancomycin,48,,,42,0,7,0,0
1,daptomycin,48,,,36,0,7,0,0
2,vancomycin,266,,,162,0,1,0,0
2,daptomycin,264,,,165,0,1,0,0
3,vancomycin,292,,,235,0,0,0,0
3,daptomycin,270,,,217,0,0,0,0
4,vancomycin,250,,,216,0,3,0,0
4,tigecycline,253,,,212,0,3,0,0
5,vancomycin,255,,,196,0,3,0,0
5,tigecycline,268,,,203,0,3,0,0
6,vancomycin,429,,,307,0,6,0,0
6,telavancin,426,,,309,0,6,0,0
7,vancomycin,489,,,360,0,6,0,0
7,telavancin,472,,,348,0,6,0,0
8,vancomycin,95,,,81,0,4,0,0
8,telavancin,100,,,82,0,4,0,0
9,vancomycin,347,,,297,0,7,0,0
9,ceftaroline,351,,,304,0,7,0,0
10,vancomycin,338,,,289,0,7,0,0
10,ceftaroline,342,,,291,0,7,0,0
11,vancomycin,32,,,26,0,5,0,0
11,ceftaroline,67,,,59,0,5,0,0
12,vancomycin,573,,,402,0,3,0,0
12,linezolid,583,,,439,0,3,0,0
13,vancomycin,87,,,54,0,-1,0,0
13,linezolid,99,,,64,0,-1,0,0
14,vancomycin,32,,,16,0,-1,1,0
14,linezolid,39,,,20,0,-1,1,0
15,vancomycin,302,,,128,0,0,1,0
15,linezolid,321,,,135,0,0,1,0
16,vancomycin,192,,,73,0,-1,1,0
16,linezolid,203,,,85,0,-1,1,0
17,vancomycin,374,,,221,0,7,1,0
17,telavancin,372,,,214,0,7,1,0
18,vancomycin,380,,,228,0,7,1,0
18,telavancin,377,,,227,0,7,1,0
19,vancomycin,148,,,67,0,-4,1,0
19,quinupristin_dalfopristin,150,,,65,0,-4,1,0
20,linezolid,33,,,,1,5,0,0
20,vancomycin,29,,,,1,5,0,0
21,linezolid,38,,,,1,5,1,0
21,vancomycin,40,,,,1,5,1,0
22,linezolid,51,,,,1,4,0,0
22,vancomycin,26,,,,1,4,0,0
23,linezolid,31,,,,1,4,1,0
23,vancomycin,17,,,,1,4,1,0
24,tigecycline,70,,,,1,5,0,0
24,vancomycin,23,,,,1,5,0,0
25,linezolid,276,,,223,0,7,0,1
25,vancomycin,266,,,196,0,7,0,1
26,linezolid,30,,,,1,5,1,1
26,vancomycin,20,,,,1,5,1,1
27,linezolid,186,,,102,0,10,1,1
27,vancomycin,205,,,92,0,10,1,1
)CSV";
  // Skip the leading newline introduced by the raw-string layout.
  return text + 1;
}

Dataset mrsa_fixture() {
  std::istringstream in(mrsa_csv_text());
  return ingest_csv_stream(in, "mrsa fixture");
}

}  // namespace nma
