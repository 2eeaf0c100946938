#pragma once

// Classic marching-cubes lookup tables (the fixed published 256-case set).
// Cube corners: v0=(0,0,0) v1=(1,0,0) v2=(1,1,0) v3=(0,1,0) and v4..v7 the
// same square at z+1. Edges 0-3 ring the bottom face, 4-7 the top, 8-11 run
// vertically from v0..v3. Bit i of the case index is set when f(v_i) < 0.

namespace epsdf::mc {

extern const int kEdgeTable[256];
extern const int kTriTable[256][16];

// marching squares: corners c0=(0,0) c1=(1,0) c2=(1,1) c3=(0,1); edges
// e0=(c0,c1) e1=(c1,c2) e2=(c3,c2) e3=(c0,c3). Up to two segments per case,
// -1 terminated; ambiguous cases 5 and 10 use the fixed separated form.
extern const int kSegTable[16][5];

}  // namespace epsdf::mc
