/**
 * Encoder backends behind one interface.
 *
 * - TfjsImageEncoder / TfjsTextEncoder run a frozen layers-format model from
 *   local files (model.json + weight shards) in deterministic eval mode; this
 *   is the path for real pretrained weights supplied by the user.
 * - HashEncoder is a deterministic stand-in for pipeline and format
 *   validation: it is NOT a learned model and carries no semantics. It exists
 *   so the export path and store formats can be exercised end to end on
 *   machines without model weights.
 */

import { createHash } from 'crypto'
import { readFileSync, writeFileSync } from 'fs'
import { dirname, join } from 'path'

import type { RgbFrame } from './frames.js'
import { resizeNearest } from './frames.js'

export interface ImageEncoder {
  readonly dim: number
  readonly name: string
  encodeImage(frame: RgbFrame): Promise<Float32Array>
}

export interface TextEncoder {
  readonly dim: number
  readonly name: string
  encodeText(text: string): Promise<Float32Array>
}

export class EncoderLoadError extends Error {}

/** sha256-seeded xorshift fill; same bytes in, same vector out, forever. */
function hashVector(seedBytes: Buffer, dim: number): Float32Array {
  const digest = createHash('sha256').update(seedBytes).digest()
  let state = digest.readBigUInt64LE(0) | 1n
  const out = new Float32Array(dim)
  for (let i = 0; i < dim; i++) {
    state ^= state << 13n
    state ^= state >> 7n
    state ^= state << 17n
    state &= 0xffffffffffffffffn
    out[i] = Number(state % 2000001n) / 1000000 - 1
  }
  return out
}

export class HashImageEncoder implements ImageEncoder {
  readonly name = 'hash'
  constructor(readonly dim: number) {}

  async encodeImage(frame: RgbFrame): Promise<Float32Array> {
    const quantized = Buffer.alloc(frame.pixels.length)
    for (let i = 0; i < frame.pixels.length; i++) {
      quantized[i] = Math.max(0, Math.min(255, Math.round(frame.pixels[i] * 255)))
    }
    const header = Buffer.from(`img:${frame.width}x${frame.height}:`, 'utf-8')
    return hashVector(Buffer.concat([header, quantized]), this.dim)
  }
}

export class HashTextEncoder implements TextEncoder {
  readonly name = 'hash'
  constructor(readonly dim: number) {}

  async encodeText(text: string): Promise<Float32Array> {
    return hashVector(Buffer.from(`txt:${text}`, 'utf-8'), this.dim)
  }
}

type Tf = typeof import('@tensorflow/tfjs')
type LayersModel = import('@tensorflow/tfjs').LayersModel
type IOHandler = import('@tensorflow/tfjs').io.IOHandler
type WeightsManifestEntry = import('@tensorflow/tfjs').io.WeightsManifestEntry

let tfModule: Tf | null = null

async function tf(): Promise<Tf> {
  if (!tfModule) {
    tfModule = await import('@tensorflow/tfjs')
  }
  return tfModule
}

/**
 * IO handler reading layers-format artifacts (model.json + weight shards)
 * from the local filesystem, since the stock handlers only cover URLs and
 * browsers.
 */
export function fileLoadHandler(modelJsonPath: string): IOHandler {
  return {
    load: async () => {
      let doc: {
        modelTopology: {}
        weightsManifest: { paths: string[]; weights: WeightsManifestEntry[] }[]
      }
      try {
        doc = JSON.parse(readFileSync(modelJsonPath, 'utf-8'))
      } catch (err) {
        throw new EncoderLoadError(`${modelJsonPath}: cannot load model topology: ${(err as Error).message}`)
      }
      const dir = dirname(modelJsonPath)
      const shards: Buffer[] = []
      const weightSpecs: WeightsManifestEntry[] = []
      for (const group of doc.weightsManifest ?? []) {
        weightSpecs.push(...group.weights)
        for (const path of group.paths) {
          try {
            shards.push(readFileSync(join(dir, path)))
          } catch (err) {
            throw new EncoderLoadError(`${modelJsonPath}: missing weight shard ${path}`)
          }
        }
      }
      const weightData = Buffer.concat(shards)
      return {
        modelTopology: doc.modelTopology,
        weightSpecs,
        weightData: weightData.buffer.slice(weightData.byteOffset, weightData.byteOffset + weightData.byteLength) as ArrayBuffer,
      }
    },
  }
}

/** Save-side counterpart used by tests to round-trip artifacts through disk. */
export function fileSaveHandler(modelJsonPath: string) {
  return {
    save: async (artifacts: {
      modelTopology: unknown
      weightSpecs?: unknown[]
      weightData?: ArrayBuffer | ArrayBuffer[]
    }) => {
      const dir = dirname(modelJsonPath)
      const data = artifacts.weightData
      const buffers = Array.isArray(data) ? data.map((d) => Buffer.from(d)) : data ? [Buffer.from(data)] : []
      writeFileSync(join(dir, 'weights.bin'), Buffer.concat(buffers))
      writeFileSync(
        modelJsonPath,
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          weightsManifest: [{ paths: ['weights.bin'], weights: artifacts.weightSpecs ?? [] }],
        })
      )
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' as const } }
    },
  }
}

export class TfjsImageEncoder implements ImageEncoder {
  readonly name: string
  private constructor(
    private readonly model: LayersModel,
    private readonly tfm: Tf,
    readonly dim: number,
    readonly inputSize: number,
    modelPath: string
  ) {
    this.name = `tfjs:${modelPath}`
  }

  static async load(modelJsonPath: string, inputSize = 224): Promise<TfjsImageEncoder> {
    const tfm = await tf()
    let model: LayersModel
    try {
      model = await tfm.loadLayersModel(fileLoadHandler(modelJsonPath))
    } catch (err) {
      if (err instanceof EncoderLoadError) throw err
      throw new EncoderLoadError(`${modelJsonPath}: ${(err as Error).message}`)
    }
    const outShape = model.outputs[0].shape
    const dim = outShape[outShape.length - 1]
    if (!dim || dim < 1) throw new EncoderLoadError(`${modelJsonPath}: cannot infer output dimension`)
    return new TfjsImageEncoder(model, tfm, dim, inputSize, modelJsonPath)
  }

  async encodeImage(frame: RgbFrame): Promise<Float32Array> {
    const resized = resizeNearest(frame, this.inputSize)
    const out = this.tfm.tidy(() => {
      const input = this.tfm.tensor4d(resized.pixels, [1, this.inputSize, this.inputSize, 3])
      return this.model.predict(input) as import('@tensorflow/tfjs').Tensor
    })
    const values = (await out.data()) as Float32Array
    out.dispose()
    return Float32Array.from(values)
  }
}

/** Whitespace-token hashing into a bag-of-token-ids sequence, then the model. */
export class TfjsTextEncoder implements TextEncoder {
  readonly name: string
  private constructor(
    private readonly model: LayersModel,
    private readonly tfm: Tf,
    readonly dim: number,
    private readonly vocabSize: number,
    private readonly maxTokens: number,
    modelPath: string
  ) {
    this.name = `tfjs:${modelPath}`
  }

  static async load(modelJsonPath: string, vocabSize = 30522, maxTokens = 128): Promise<TfjsTextEncoder> {
    const tfm = await tf()
    let model: LayersModel
    try {
      model = await tfm.loadLayersModel(fileLoadHandler(modelJsonPath))
    } catch (err) {
      if (err instanceof EncoderLoadError) throw err
      throw new EncoderLoadError(`${modelJsonPath}: ${(err as Error).message}`)
    }
    const outShape = model.outputs[0].shape
    const dim = outShape[outShape.length - 1]
    if (!dim || dim < 1) throw new EncoderLoadError(`${modelJsonPath}: cannot infer output dimension`)
    return new TfjsTextEncoder(model, tfm, dim, vocabSize, maxTokens, modelJsonPath)
  }

  async encodeText(text: string): Promise<Float32Array> {
    const ids = text
      .toLowerCase()
      .split(/\s+/)
      .filter((t) => t.length > 0)
      .slice(0, this.maxTokens)
      .map((token) => Number(BigInt('0x' + createHash('sha256').update(token).digest('hex').slice(0, 12)) % BigInt(this.vocabSize)))
    const padded = ids.concat(Array(this.maxTokens - ids.length).fill(0))
    const out = this.tfm.tidy(() => {
      const input = this.tfm.tensor2d(padded, [1, this.maxTokens], 'int32')
      return this.model.predict(input) as import('@tensorflow/tfjs').Tensor
    })
    const values = (await out.data()) as Float32Array
    out.dispose()
    return Float32Array.from(values)
  }
}
