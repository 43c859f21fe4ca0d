import { mkdtempSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'
import { describe, expect, it } from 'vitest'

import {
  EncoderLoadError,
  HashImageEncoder,
  HashTextEncoder,
  TfjsImageEncoder,
  TfjsTextEncoder,
  fileSaveHandler,
} from '../src/encoders.js'
import { decodePpm } from '../src/frames.js'
import { ppmBuffer } from './helpers.js'

describe('hash encoders', () => {
  it('are deterministic and shaped', async () => {
    const frame = decodePpm(ppmBuffer(3, 3, (x, y) => [x * 40, y * 40, 128]), 't')
    const image = new HashImageEncoder(1024)
    const a = await image.encodeImage(frame)
    const b = await image.encodeImage(frame)
    expect(a.length).toBe(1024)
    expect([...a]).toEqual([...b])

    const text = new HashTextEncoder(768)
    const ta = await text.encodeText('bonsoir à tous')
    expect(ta.length).toBe(768)
    expect([...ta]).toEqual([...(await text.encodeText('bonsoir à tous'))])
    expect([...ta]).not.toEqual([...(await text.encodeText('bonsoir a tous'))])
  })

  it('different images give different vectors', async () => {
    const image = new HashImageEncoder(64)
    const a = await image.encodeImage(decodePpm(ppmBuffer(2, 2, () => [1, 2, 3]), 't'))
    const b = await image.encodeImage(decodePpm(ppmBuffer(2, 2, () => [3, 2, 1]), 't'))
    expect([...a]).not.toEqual([...b])
  })
})

describe('tfjs encoders', () => {
  it('round-trips a frozen image model through disk and runs it deterministically', async () => {
    const tf = await import('@tensorflow/tfjs')
    const model = tf.sequential({
      layers: [
        tf.layers.inputLayer({ inputShape: [8, 8, 3] }),
        tf.layers.globalAveragePooling2d({}),
        tf.layers.dense({ units: 16, activation: 'linear' }),
      ],
    })
    const dir = mkdtempSync(join(tmpdir(), 'tfjs-'))
    const modelJson = join(dir, 'model.json')
    await model.save(fileSaveHandler(modelJson))

    const encoder = await TfjsImageEncoder.load(modelJson, 8)
    expect(encoder.dim).toBe(16)
    const frame = decodePpm(ppmBuffer(32, 16, (x, y) => [x * 7, y * 9, 30]), 't')
    const a = await encoder.encodeImage(frame)
    const b = await encoder.encodeImage(frame)
    expect(a.length).toBe(16)
    expect([...a]).toEqual([...b])

    // the wrapper must agree with calling the model directly on the resized input
    const { resizeNearest } = await import('../src/frames.js')
    const resized = resizeNearest(frame, 8)
    const direct = tf.tidy(() =>
      model.predict(tf.tensor4d(resized.pixels, [1, 8, 8, 3])) as import('@tensorflow/tfjs').Tensor
    )
    const expected = Array.from(await direct.data())
    direct.dispose()
    for (let i = 0; i < 16; i++) {
      expect(a[i]).toBeCloseTo(expected[i], 5)
    }
  })

  it('round-trips a frozen text model and embeds deterministically', async () => {
    const tf = await import('@tensorflow/tfjs')
    const model = tf.sequential({
      layers: [
        tf.layers.inputLayer({ inputShape: [16], dtype: 'int32' }),
        tf.layers.embedding({ inputDim: 100, outputDim: 12 }),
        tf.layers.globalAveragePooling1d({}),
        tf.layers.dense({ units: 24, activation: 'linear' }),
      ],
    })
    const dir = mkdtempSync(join(tmpdir(), 'tfjs-'))
    const modelJson = join(dir, 'model.json')
    await model.save(fileSaveHandler(modelJson))

    const encoder = await TfjsTextEncoder.load(modelJson, 100, 16)
    expect(encoder.dim).toBe(24)
    const a = await encoder.encodeText('les titres de ce soir')
    expect(a.length).toBe(24)
    expect([...a]).toEqual([...(await encoder.encodeText('les titres de ce soir'))])
    expect([...a]).not.toEqual([...(await encoder.encodeText('autre chose entièrement'))])
  })

  it('reports a clean error for a missing model path', async () => {
    await expect(TfjsImageEncoder.load('/nonexistent/model.json')).rejects.toThrow(EncoderLoadError)
  })
})
