/**
 * Frame access for pre-extracted streams. Video containers are out of scope
 * here: frames arrive as one image file per frame index, either binary PPM
 * (P6, 8-bit) or raw float32 RGB with a trivial header-free layout declared
 * by file name: frame_<index>.ppm or frame_<index>_<w>x<h>.rgbf32.
 */

import { existsSync, readFileSync, readdirSync } from 'fs'
import { join } from 'path'

export interface RgbFrame {
  width: number
  height: number
  /** interleaved RGB in [0, 1], length width*height*3 */
  pixels: Float32Array
}

export class FrameDecodeError extends Error {}

/** Central frame of a shot at the given frame rate. */
export function centralFrameIndex(startS: number, endS: number, fps: number): number {
  return Math.floor(((startS + endS) / 2) * fps)
}

export function decodePpm(buffer: Buffer, label: string): RgbFrame {
  // header: "P6" <ws> width <ws> height <ws> maxval <single ws> payload
  const header: number[] = []
  let offset = 0
  while (header.length < 4 && offset < buffer.length) {
    while (offset < buffer.length && /\s/.test(String.fromCharCode(buffer[offset]))) offset++
    if (buffer[offset] === 0x23) {
      // comment line
      while (offset < buffer.length && buffer[offset] !== 0x0a) offset++
      continue
    }
    let token = ''
    while (offset < buffer.length && !/\s/.test(String.fromCharCode(buffer[offset]))) {
      token += String.fromCharCode(buffer[offset])
      offset++
    }
    if (header.length === 0) {
      if (token !== 'P6') throw new FrameDecodeError(`${label}: not a binary PPM (got ${JSON.stringify(token)})`)
      header.push(6)
    } else {
      const value = Number(token)
      if (!Number.isInteger(value) || value <= 0) throw new FrameDecodeError(`${label}: bad header token ${token}`)
      header.push(value)
    }
  }
  if (header.length < 4) throw new FrameDecodeError(`${label}: truncated PPM header`)
  offset++ // the single whitespace after maxval
  const [, width, height, maxval] = header
  if (maxval > 255) throw new FrameDecodeError(`${label}: 16-bit PPM not supported`)
  const need = width * height * 3
  if (buffer.length - offset < need) {
    throw new FrameDecodeError(`${label}: payload holds ${buffer.length - offset} bytes, expected ${need}`)
  }
  const pixels = new Float32Array(need)
  for (let i = 0; i < need; i++) pixels[i] = buffer[offset + i] / maxval
  return { width, height, pixels }
}

export function decodeRawFloatRgb(buffer: Buffer, width: number, height: number, label: string): RgbFrame {
  const need = width * height * 3 * 4
  if (buffer.length !== need) {
    throw new FrameDecodeError(`${label}: ${buffer.length} bytes for ${width}x${height} raw RGB, expected ${need}`)
  }
  const pixels = new Float32Array(width * height * 3)
  for (let i = 0; i < pixels.length; i++) pixels[i] = buffer.readFloatLE(i * 4)
  return { width, height, pixels }
}

/** Load frame `index` from a directory of pre-extracted frames. */
export function loadFrame(framesDir: string, index: number): RgbFrame {
  const padded = String(index).padStart(6, '0')
  const ppmPath = join(framesDir, `frame_${padded}.ppm`)
  if (existsSync(ppmPath)) {
    return decodePpm(readFileSync(ppmPath), ppmPath)
  }
  const siblings = rawSiblings(framesDir, padded)
  if (siblings) return siblings
  throw new FrameDecodeError(`no frame file for index ${index} under ${framesDir}`)
}

function rawSiblings(framesDir: string, padded: string): RgbFrame | null {
  const pattern = new RegExp(`^frame_${padded}_(\\d+)x(\\d+)\\.rgbf32$`)
  for (const name of readdirSync(framesDir)) {
    const match = pattern.exec(name)
    if (match) {
      const width = Number(match[1])
      const height = Number(match[2])
      return decodeRawFloatRgb(readFileSync(join(framesDir, name)), width, height, name)
    }
  }
  return null
}

/** Nearest-neighbor resize to size x size; documented in the export sidecar. */
export function resizeNearest(frame: RgbFrame, size: number): RgbFrame {
  const pixels = new Float32Array(size * size * 3)
  for (let y = 0; y < size; y++) {
    const sy = Math.min(frame.height - 1, Math.floor((y * frame.height) / size))
    for (let x = 0; x < size; x++) {
      const sx = Math.min(frame.width - 1, Math.floor((x * frame.width) / size))
      for (let c = 0; c < 3; c++) {
        pixels[(y * size + x) * 3 + c] = frame.pixels[(sy * frame.width + sx) * 3 + c]
      }
    }
  }
  return { width: size, height: size, pixels }
}
