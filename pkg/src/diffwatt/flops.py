"""Closed-form FLOP accounting for diffusion-model inference.

Counts multiply-add pairs as 2 FLOPs.  All arithmetic is exact (Python
ints); quantities are exposed both as exact FLOP counts and as GFLOPs
(= FLOPs / 1e9).  The building blocks are the convolution, transformer,
multimodal-diffusion-transformer (MMDiT), cross-attention and ResNet-block
cost formulas; per-model compositions combine them into the cost of one
denoiser forward pass, the text-encoder stack and the VAE decoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import DomainError, UnsupportedModelError

FLOPS_PER_GFLOP = 10**9

#: Text/conditioning tokens appended to the latent patch tokens of each
#: MMDiT-based model.  Qwen's count is a dataset average and can be
#: overridden per call.
TEXT_TOKENS = {"flux": 512, "qwen": 12, "sd35": 333}


class ModelId(str, Enum):
    FLUX = "flux"
    SD35 = "sd35"
    SD2 = "sd2"
    QWEN = "qwen"


class GpuId(str, Enum):
    A100 = "a100"
    A4000 = "a4000"
    A6000 = "a6000"


class Precision(str, Enum):
    FP16 = "fp16"
    FP32 = "fp32"


def _require_positive(**fields: int) -> None:
    for name, value in fields.items():
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise DomainError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Resolution:
    """Output image size in pixels.

    Both sides must be multiples of 64 so that every latent-grid division
    (/2 ... /16 of the /8 latent) stays integral.
    """

    height: int
    width: int

    def __post_init__(self) -> None:
        _require_positive(height=self.height, width=self.width)
        for name, value in (("height", self.height), ("width", self.width)):
            if value % 64 != 0:
                raise DomainError(f"{name} must be a multiple of 64, got {value}")

    @property
    def area(self) -> int:
        return self.height * self.width

    @property
    def latent_tokens(self) -> int:
        """Patch tokens on the 16x16-pixel latent grid."""
        return self.area // 256


@dataclass(frozen=True)
class TransformerDims:
    """Shape of a (self-attention) transformer stack.

    ``d_ff`` may be zero: the U-Net's attention blocks carry no
    feed-forward sublayer and are costed with ``d_ff = 0``.
    """

    d_model: int
    d_ff: int
    d_attn: int
    n_layer: int
    n_ctx: int

    def __post_init__(self) -> None:
        _require_positive(
            d_model=self.d_model,
            d_attn=self.d_attn,
            n_layer=self.n_layer,
            n_ctx=self.n_ctx,
        )
        if not isinstance(self.d_ff, int) or isinstance(self.d_ff, bool) or self.d_ff < 0:
            raise DomainError(f"d_ff must be a nonnegative integer, got {self.d_ff!r}")


@dataclass(frozen=True)
class CrossAttnDims:
    """Shape of a cross-attention transformer block."""

    d_q: int
    d_k: int
    d_ff: int
    d_attn: int
    n_layer: int
    n_q: int
    n_k: int

    def __post_init__(self) -> None:
        _require_positive(
            d_q=self.d_q,
            d_k=self.d_k,
            d_ff=self.d_ff,
            d_attn=self.d_attn,
            n_layer=self.n_layer,
            n_q=self.n_q,
            n_k=self.n_k,
        )


@dataclass(frozen=True)
class ConvSpec:
    """A square-kernel convolution over an HxW feature map."""

    kernel: int
    c_in: int
    c_out: int
    height: int
    width: int

    def __post_init__(self) -> None:
        _require_positive(
            kernel=self.kernel,
            c_in=self.c_in,
            c_out=self.c_out,
            height=self.height,
            width=self.width,
        )


@dataclass(frozen=True)
class InferenceConfig:
    """One text-to-image inference scenario."""

    model: ModelId
    resolution: Resolution
    steps: int
    precision: Precision
    cfg: bool
    num_prompts: int
    gpu: GpuId

    def __post_init__(self) -> None:
        _require_positive(steps=self.steps, num_prompts=self.num_prompts)
        if self.model is ModelId.QWEN and self.precision is not Precision.FP16:
            raise DomainError("qwen supports fp16 only (no fp32 measurements exist)")


@dataclass(frozen=True)
class FlopBreakdown:
    """Per-component GFLOP costs of an inference scenario.

    ``total_gflops`` is the single-prompt, no-CFG sum
    text + steps * denoise + decode.  ``effective_total_gflops`` is the
    denoise-dominated approximation actually used for energy modelling:
    num_prompts * steps * denoise, doubled when classifier-free guidance
    runs conditional and unconditional passes.
    """

    text_gflops: float
    denoise_per_step_gflops: float
    decode_gflops: float
    steps: int
    num_prompts: int
    cfg: bool
    total_gflops: float
    effective_total_gflops: float
    text_modeled: bool = True

    def as_dict(self) -> dict:
        return {
            "text_gflops": self.text_gflops,
            "denoise_per_step_gflops": self.denoise_per_step_gflops,
            "decode_gflops": self.decode_gflops,
            "steps": self.steps,
            "num_prompts": self.num_prompts,
            "cfg": self.cfg,
            "total_gflops": self.total_gflops,
            "effective_total_gflops": self.effective_total_gflops,
            "text_modeled": self.text_modeled,
        }


# --- formula atoms (exact ints) ---------------------------------------------

def _conv(k: int, c_in: int, c_out: int, h: int, w: int) -> int:
    return 2 * h * w * k * k * c_in * c_out


def _transformer(d_model: int, d_ff: int, d_attn: int, n_layer: int, n_ctx: int) -> int:
    n_params = 2 * d_model * n_layer * (2 * d_attn + d_ff)
    return n_ctx * (2 * n_params + 2 * n_layer * n_ctx * d_attn)


def _mmdit(d_model: int, d_ff: int, d_attn: int, n_layer: int, n_ctx: int) -> int:
    n_params = 4 * d_model * n_layer * (2 * d_attn + d_ff)
    return n_ctx * (n_params + 2 * n_layer * n_ctx * d_attn)


def _cross_attn(d_q: int, d_k: int, d_ff: int, d_attn: int, n_layer: int, n_q: int, n_k: int) -> int:
    n_params = 2 * n_layer * (d_q * (d_attn + d_ff) + d_k * d_attn)
    return n_q * (2 * n_params + 2 * n_layer * n_k * d_attn)


def _resnet_block(k: int, c_in: int, c_out: int, h: int, w: int) -> int:
    return _conv(k, c_in, c_out, h, w) + _conv(k, c_out, c_out, h, w)


def conv_flops(spec: ConvSpec) -> int:
    """2 * H * W * k^2 * C_in * C_out."""
    return _conv(spec.kernel, spec.c_in, spec.c_out, spec.height, spec.width)


def transformer_flops(dims: TransformerDims) -> int:
    """n_ctx * (2N + 2 * n_layer * n_ctx * d_attn) with N = 2 * d_model * n_layer * (2 * d_attn + d_ff)."""
    return _transformer(dims.d_model, dims.d_ff, dims.d_attn, dims.n_layer, dims.n_ctx)


def mmdit_flops(dims: TransformerDims) -> int:
    """n_ctx * (N + 2 * n_layer * n_ctx * d_attn) with N = 4 * d_model * n_layer * (2 * d_attn + d_ff)."""
    return _mmdit(dims.d_model, dims.d_ff, dims.d_attn, dims.n_layer, dims.n_ctx)


def cross_attn_flops(dims: CrossAttnDims) -> int:
    """n_q * (2N + 2 * n_layer * n_k * d_attn) with N = 2 * n_layer * (d_q (d_attn + d_ff) + d_k d_attn)."""
    return _cross_attn(
        dims.d_q, dims.d_k, dims.d_ff, dims.d_attn, dims.n_layer, dims.n_q, dims.n_k
    )


def resnet_block_flops(spec: ConvSpec) -> int:
    """Two stacked convolutions: C_in -> C_out then C_out -> C_out."""
    return _resnet_block(spec.kernel, spec.c_in, spec.c_out, spec.height, spec.width)


def kaplan_denoise_approx(
    nonembedding_params: int, d_attn: int, n_layer: int, seq_len: int
) -> int:
    """Parameter-count shortcut for one denoiser pass, for comparison only.

    Total cost of processing ``seq_len`` tokens at a per-token cost of
    2N + 2 * seq_len * d_attn * n_layer.  The fitted pipeline never uses
    this; the per-model compositions are authoritative.
    """
    _require_positive(
        nonembedding_params=nonembedding_params,
        d_attn=d_attn,
        n_layer=n_layer,
        seq_len=seq_len,
    )
    per_token = 2 * nonembedding_params + 2 * seq_len * d_attn * n_layer
    return seq_len * per_token


# --- per-model compositions --------------------------------------------------

def vae_decoder_flop_count(res: Resolution) -> int:
    """Latent-to-pixel decoder, exact FLOPs, evaluated on the /8 latent grid."""
    h0, w0 = res.height // 8, res.width // 8
    total = _conv(3, 16, 512, h0, w0)
    # mid block: ResNet pair around one single-layer attention block
    total += 2 * _resnet_block(3, 512, 512, h0, w0)
    total += _transformer(512, 256, 512, 1, h0 * w0)
    total += 3 * _resnet_block(3, 512, 512, h0, w0)
    # upsampling chain back to pixel space
    total += _conv(3, 512, 512, 2 * h0, 2 * w0)
    total += 3 * _resnet_block(3, 512, 512, 2 * h0, 2 * w0)
    total += _conv(3, 512, 512, 4 * h0, 4 * w0)
    total += _resnet_block(3, 512, 256, 4 * h0, 4 * w0)
    total += 2 * _resnet_block(3, 256, 256, 4 * h0, 4 * w0)
    total += _conv(3, 256, 256, 8 * h0, 8 * w0)
    total += _resnet_block(3, 256, 128, 8 * h0, 8 * w0)
    total += 2 * _resnet_block(3, 128, 128, 8 * h0, 8 * w0)
    total += _conv(3, 128, 3, 8 * h0, 8 * w0)
    return total


def vae_decoder_flops(res: Resolution) -> float:
    """Decoder cost in GFLOPs."""
    return vae_decoder_flop_count(res) / FLOPS_PER_GFLOP


def _sd2_step_flop_count(height: int, width: int) -> int:
    """U-Net denoiser pass: ConvIn, Down 1-4, Mid, Up 1-4, ConvOut.

    The bare ``n * h0 * w0 * ch**2`` terms are the attention blocks'
    projection-in/out corrections.
    """
    h0, w0 = height // 8, width // 8
    total = _conv(3, 4, 320, h0, w0)
    # Down 1 (h0 -> h0/2)
    total += 2 * _resnet_block(3, 320, 320, h0, w0)
    total += 2 * _transformer(320, 0, 320, 1, h0 * w0)
    total += 2 * _cross_attn(320, 1024, 1920, 320, 1, h0 * w0, 77)
    total += 4 * h0 * w0 * 320**2
    total += _conv(3, 320, 320, h0 // 2, w0 // 2)
    # Down 2 (h0/2 -> h0/4)
    total += _resnet_block(3, 320, 640, h0 // 2, w0 // 2)
    total += _resnet_block(3, 640, 640, h0 // 2, w0 // 2)
    total += 2 * _transformer(640, 0, 640, 1, h0 * w0 // 4)
    total += 2 * _cross_attn(640, 1024, 3840, 640, 1, h0 * w0 // 4, 77)
    total += h0 * w0 * 640**2
    total += _conv(3, 640, 640, h0 // 4, w0 // 4)
    # Down 3 (h0/4 -> h0/8)
    total += _resnet_block(3, 640, 1280, h0 // 4, w0 // 4)
    total += _resnet_block(3, 1280, 1280, h0 // 4, w0 // 4)
    total += 2 * _transformer(1280, 0, 1280, 1, h0 * w0 // 16)
    total += 2 * _cross_attn(1280, 1024, 7680, 1280, 1, h0 * w0 // 16, 77)
    total += (h0 * w0 // 4) * 1280**2
    total += _conv(3, 1280, 1280, h0 // 8, w0 // 8)
    # Down 4 (h0/8, no attention)
    total += 2 * _resnet_block(3, 1280, 1280, h0 // 8, w0 // 8)
    # Mid
    total += 2 * _resnet_block(3, 1280, 1280, h0 // 8, w0 // 8)
    total += _transformer(1280, 0, 1280, 1, h0 * w0 // 64)
    total += _cross_attn(1280, 1024, 7680, 1280, 1, h0 * w0 // 64, 77)
    total += (h0 * w0 // 16) * 1280**2
    # Up 1 (h0/8 -> h0/4, skip-concat doubles input channels)
    total += 3 * _resnet_block(3, 2560, 1280, h0 // 8, w0 // 8)
    total += _conv(3, 1280, 1280, h0 // 4, w0 // 4)
    # Up 2 (h0/4 -> h0/2)
    total += 2 * _resnet_block(3, 2560, 1280, h0 // 4, w0 // 4)
    total += _resnet_block(3, 1920, 1280, h0 // 4, w0 // 4)
    total += 3 * _transformer(1280, 0, 1280, 1, h0 * w0 // 16)
    total += 3 * _cross_attn(1280, 1024, 7680, 1280, 1, h0 * w0 // 16, 77)
    total += (3 * h0 * w0 // 4) * 1280**2
    total += _conv(3, 1280, 1280, h0 // 2, w0 // 2)
    # Up 3 (h0/2 -> h0)
    total += _resnet_block(3, 1920, 640, h0 // 2, w0 // 2)
    total += _resnet_block(3, 1280, 640, h0 // 2, w0 // 2)
    total += _resnet_block(3, 960, 640, h0 // 2, w0 // 2)
    total += 3 * _transformer(640, 0, 640, 1, h0 * w0 // 4)
    total += 3 * _cross_attn(640, 1024, 3840, 640, 1, h0 * w0 // 4, 77)
    total += 3 * h0 * w0 * 640**2
    total += _conv(3, 640, 640, h0, w0)
    # Up 4 (h0)
    total += 2 * _resnet_block(3, 640, 320, h0, w0)
    total += _resnet_block(3, 960, 320, h0, w0)
    total += 3 * _transformer(320, 0, 320, 1, h0 * w0)
    total += 3 * _cross_attn(320, 1024, 1920, 320, 1, h0 * w0, 77)
    total += 12 * h0 * w0 * 320**2
    total += _conv(3, 320, 4, h0, w0)
    return total


def denoise_step_flop_count(
    model: ModelId, res: Resolution, qwen_text_tokens: int = 12
) -> int:
    """Exact FLOPs of one denoiser forward pass."""
    model = ModelId(model)
    if model is ModelId.FLUX:
        n_ctx = res.latent_tokens + TEXT_TOKENS["flux"]
        return _mmdit(3072, 12288, 3072, 19, n_ctx) + _transformer(
            3072, 12288, 3072, 38, n_ctx
        )
    if model is ModelId.QWEN:
        _require_positive(qwen_text_tokens=qwen_text_tokens)
        n_ctx = res.latent_tokens + qwen_text_tokens
        return _mmdit(3072, 12288, 3072, 60, n_ctx)
    if model is ModelId.SD35:
        n_ctx = res.latent_tokens + TEXT_TOKENS["sd35"]
        return _mmdit(2432, 9478, 2432, 38, n_ctx)
    return _sd2_step_flop_count(res.height, res.width)


def denoise_flops_per_step(
    model: ModelId, res: Resolution, qwen_text_tokens: int = 12
) -> float:
    """One denoiser forward pass in GFLOPs."""
    return denoise_step_flop_count(model, res, qwen_text_tokens) / FLOPS_PER_GFLOP


def text_encoder_flop_count(model: ModelId) -> int:
    """Exact FLOPs of the text/conditioning encoder stack.

    The +24*10240*4097 bias covers gated-linear-unit activation blocks in
    the large encoder; the Qwen correction rescales its multi-query
    attention and is negative as published.
    """
    model = ModelId(model)
    glu_bias = 24 * 10240 * 4097
    if model is ModelId.FLUX:
        return (
            _transformer(768, 3072, 768, 12, 77)
            + _transformer(4096, 10240, 4096, 24, 512)
            + glu_bias
        )
    if model is ModelId.QWEN:
        mqa_correction = 28 * 12 * 2 * (2 * 3584 * (512 - 3584))
        return _transformer(3584, 18944, 3584, 28, 12) + mqa_correction
    if model is ModelId.SD35:
        return (
            _transformer(768, 3072, 768, 12, 77)
            + _transformer(1280, 5120, 1280, 32, 77)
            + _transformer(4096, 10240, 4096, 24, 256)
            + glu_bias
        )
    raise UnsupportedModelError("no text-encoder composition for sd2")


def text_encoder_flops(model: ModelId) -> float:
    """Text-encoder stack cost in GFLOPs."""
    return text_encoder_flop_count(model) / FLOPS_PER_GFLOP


def breakdown(config: InferenceConfig) -> FlopBreakdown:
    """Decompose a scenario into text + steps * denoise + decode GFLOPs.

    The effective total applies the denoise-dominated approximation
    num_prompts * steps * denoise * 2^cfg used by the energy law.  SD2's
    text term is not modeled and reported as 0 (``text_modeled=False``);
    that omission never reaches the fitted pipeline, which only consumes
    the effective total.
    """
    if config.model is ModelId.SD2:
        text = 0
        text_modeled = False
    else:
        text = text_encoder_flop_count(config.model)
        text_modeled = True
    denoise = denoise_step_flop_count(config.model, config.resolution)
    decode = vae_decoder_flop_count(config.resolution)
    total = text + config.steps * denoise + decode
    effective = config.num_prompts * config.steps * denoise * (2 if config.cfg else 1)
    return FlopBreakdown(
        text_gflops=text / FLOPS_PER_GFLOP,
        denoise_per_step_gflops=denoise / FLOPS_PER_GFLOP,
        decode_gflops=decode / FLOPS_PER_GFLOP,
        steps=config.steps,
        num_prompts=config.num_prompts,
        cfg=config.cfg,
        total_gflops=total / FLOPS_PER_GFLOP,
        effective_total_gflops=effective / FLOPS_PER_GFLOP,
        text_modeled=text_modeled,
    )


def denoise_share(model: ModelId, res: Resolution, steps: int) -> float:
    """Fraction of single-prompt FLOPs spent denoising.

    Only defined for models with a modeled text encoder.
    """
    model = ModelId(model)
    if model is ModelId.SD2:
        raise UnsupportedModelError("denoise share undefined for sd2 (text cost not modeled)")
    _require_positive(steps=steps)
    denoise = steps * denoise_step_flop_count(model, res)
    total = text_encoder_flop_count(model) + denoise + vae_decoder_flop_count(res)
    return denoise / total
