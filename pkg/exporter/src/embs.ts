/**
 * Embedding store binary format, bit-compatible with the Python reader:
 * magic "EMBS" | u32 version=1 | u32 count | u32 dim | count*dim float32,
 * all little-endian, rows in row-major order.
 */

import { readFileSync, writeFileSync } from 'fs'

const MAGIC = 'EMBS'
const VERSION = 1

export interface EmbeddingMatrix {
  count: number
  dim: number
  /** row-major, length count*dim */
  values: Float32Array
}

export class StoreFormatError extends Error {}

export function writeStore(path: string, rows: Float32Array[] | number[][], dim: number): void {
  const count = rows.length
  const payload = new Float32Array(count * dim)
  for (let i = 0; i < count; i++) {
    const row = rows[i]
    if (row.length !== dim) {
      throw new StoreFormatError(`row ${i} has ${row.length} values, store dim is ${dim}`)
    }
    for (let j = 0; j < dim; j++) {
      const v = Number(row[j])
      if (!Number.isFinite(v)) {
        throw new StoreFormatError(`non-finite value at row ${i}, column ${j}`)
      }
      payload[i * dim + j] = v
    }
  }
  const buffer = Buffer.alloc(16 + payload.length * 4)
  buffer.write(MAGIC, 0, 'ascii')
  buffer.writeUInt32LE(VERSION, 4)
  buffer.writeUInt32LE(count, 8)
  buffer.writeUInt32LE(dim, 12)
  Buffer.from(payload.buffer, payload.byteOffset, payload.byteLength).copy(buffer, 16)
  writeFileSync(path, buffer)
}

export function readStore(path: string): EmbeddingMatrix {
  const buffer = readFileSync(path)
  if (buffer.length < 16) {
    throw new StoreFormatError(`${path}: file too short for a store header`)
  }
  if (buffer.toString('ascii', 0, 4) !== MAGIC) {
    throw new StoreFormatError(`${path}: bad magic ${JSON.stringify(buffer.toString('ascii', 0, 4))}`)
  }
  const version = buffer.readUInt32LE(4)
  if (version !== VERSION) {
    throw new StoreFormatError(`${path}: unknown store version ${version}`)
  }
  const count = buffer.readUInt32LE(8)
  const dim = buffer.readUInt32LE(12)
  const expected = 16 + count * dim * 4
  if (buffer.length < expected) {
    throw new StoreFormatError(`${path}: truncated payload (${buffer.length} bytes, expected ${expected})`)
  }
  if (buffer.length > expected) {
    throw new StoreFormatError(`${path}: ${buffer.length - expected} trailing bytes`)
  }
  const values = new Float32Array(count * dim)
  for (let i = 0; i < values.length; i++) {
    values[i] = buffer.readFloatLE(16 + i * 4)
  }
  return { count, dim, values }
}
