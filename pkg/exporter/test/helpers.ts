/** Shared fixture: build a binary PPM buffer from a per-pixel fill function. */

export function ppmBuffer(
  width: number,
  height: number,
  fill: (x: number, y: number) => [number, number, number]
): Buffer {
  const payload = Buffer.alloc(width * height * 3)
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = fill(x, y)
      payload[(y * width + x) * 3] = r
      payload[(y * width + x) * 3 + 1] = g
      payload[(y * width + x) * 3 + 2] = b
    }
  }
  return Buffer.concat([Buffer.from(`P6\n${width} ${height}\n255\n`, 'ascii'), payload])
}
