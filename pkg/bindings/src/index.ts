/** Typed-array bindings over the warpforge CLI and its file formats. */

export {
  BUNDLE_FORMAT,
  loadBundle,
  validateVideoArrays,
  writeBundle,
  type CameraParams,
  type VideoArrays,
} from "./bundle";
export { runWarpforge, warpforgeBinary, type CliResult } from "./cli";
export {
  CliError,
  CliIoError,
  CliUsageError,
  CliValidationError,
  FormatError,
  ShapeError,
} from "./errors";
export {
  readDpt1,
  readManifest,
  readPngMask,
  readPngRgb,
  writeDpt1,
  writeManifest,
  writePngMask,
  writePngRgb,
  type DepthImage,
  type MaskImage,
  type RgbImage,
} from "./formats";
export {
  PACK_FORMAT,
  PAIR_FORMAT,
  SAMPLE_FORMAT,
  buildPackedSequence,
  doubleReproject,
  emitStageDataset,
  loadTrainingPair,
  sampleComposite,
  type CompositeMode,
  type CompositeSampleArrays,
  type PackedSequenceArrays,
  type StageManifestJson,
  type TrainingPairArrays,
} from "./ops";
