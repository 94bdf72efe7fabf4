// Binary STL parser producing flat position/normal arrays ready for a
// three.js BufferGeometry (non-indexed, one vertex triple per facet).

const HEADER_BYTES = 80;
const FACET_BYTES = 50;

export interface StlMesh {
  triangleCount: number;
  positions: Float32Array; // 9 floats per triangle
  normals: Float32Array;   // 9 floats per triangle (facet normal repeated)
}

export function parseBinaryStl(buffer: ArrayBuffer): StlMesh {
  if (buffer.byteLength < HEADER_BYTES + 4) {
    throw new Error('truncated STL: missing header');
  }
  const view = new DataView(buffer);
  const triangleCount = view.getUint32(HEADER_BYTES, true);
  const expected = HEADER_BYTES + 4 + triangleCount * FACET_BYTES;
  if (buffer.byteLength < expected) {
    throw new Error(
      `truncated STL: ${buffer.byteLength} bytes, expected ${expected}`,
    );
  }
  const positions = new Float32Array(triangleCount * 9);
  const normals = new Float32Array(triangleCount * 9);
  for (let t = 0; t < triangleCount; t++) {
    const base = HEADER_BYTES + 4 + t * FACET_BYTES;
    const nx = view.getFloat32(base, true);
    const ny = view.getFloat32(base + 4, true);
    const nz = view.getFloat32(base + 8, true);
    for (let v = 0; v < 3; v++) {
      const src = base + 12 + v * 12;
      const dst = t * 9 + v * 3;
      positions[dst] = view.getFloat32(src, true);
      positions[dst + 1] = view.getFloat32(src + 4, true);
      positions[dst + 2] = view.getFloat32(src + 8, true);
      normals[dst] = nx;
      normals[dst + 1] = ny;
      normals[dst + 2] = nz;
    }
  }
  return { triangleCount, positions, normals };
}
