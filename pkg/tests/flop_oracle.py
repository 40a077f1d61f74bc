"""Independent term-by-term FLOP evaluator used as a test oracle.

This module deliberately does NOT import anything from ``diffwatt``.  Every
formula is transcribed here a second time, organized as explicit per-stage
term lists so mistakes in the library cannot be mirrored by shared code.
All arithmetic is exact (Python ints).
"""

from __future__ import annotations


def oracle_conv(k: int, c_in: int, c_out: int, h: int, w: int) -> int:
    return 2 * h * w * k * k * c_in * c_out


def oracle_conv_loop_nest(k: int, c_in: int, c_out: int, h: int, w: int) -> int:
    """Count multiply-add pairs one output element at a time (2 FLOPs per MAC).

    Same-padding convolution whose every output element reduces over a full
    k*k*c_in window.  Only usable for small shapes.
    """
    flops = 0
    for _y in range(h):
        for _x in range(w):
            for _co in range(c_out):
                macs = 0
                for _ky in range(k):
                    for _kx in range(k):
                        macs += c_in
                flops += 2 * macs
    return flops


def oracle_transformer(d_model: int, d_ff: int, d_attn: int, n_layer: int, n_ctx: int) -> int:
    n_params = 2 * d_model * n_layer * (2 * d_attn + d_ff)
    per_token = 2 * n_params + 2 * n_layer * n_ctx * d_attn
    return n_ctx * per_token


def oracle_mmdit(d_model: int, d_ff: int, d_attn: int, n_layer: int, n_ctx: int) -> int:
    n_params = 4 * d_model * n_layer * (2 * d_attn + d_ff)
    per_token = n_params + 2 * n_layer * n_ctx * d_attn
    return n_ctx * per_token


def oracle_cross_attn(
    d_q: int, d_k: int, d_ff: int, d_attn: int, n_layer: int, n_q: int, n_k: int
) -> int:
    n_params = 2 * n_layer * (d_q * (d_attn + d_ff) + d_k * d_attn)
    per_query = 2 * n_params + 2 * n_layer * n_k * d_attn
    return n_q * per_query


def oracle_resnet_block(k: int, c_in: int, c_out: int, h: int, w: int) -> int:
    return oracle_conv(k, c_in, c_out, h, w) + oracle_conv(k, c_out, c_out, h, w)


def oracle_decoder_terms(height: int, width: int) -> list[int]:
    """The VAE decoder as its individual summands, in published order."""
    h0, w0 = height // 8, width // 8
    return [
        oracle_conv(3, 16, 512, h0, w0),
        2 * oracle_resnet_block(3, 512, 512, h0, w0),
        oracle_transformer(512, 256, 512, 1, h0 * w0),
        3 * oracle_resnet_block(3, 512, 512, h0, w0),
        oracle_conv(3, 512, 512, 2 * h0, 2 * w0),
        3 * oracle_resnet_block(3, 512, 512, 2 * h0, 2 * w0),
        oracle_conv(3, 512, 512, 4 * h0, 4 * w0),
        oracle_resnet_block(3, 512, 256, 4 * h0, 4 * w0),
        2 * oracle_resnet_block(3, 256, 256, 4 * h0, 4 * w0),
        oracle_conv(3, 256, 256, 8 * h0, 8 * w0),
        oracle_resnet_block(3, 256, 128, 8 * h0, 8 * w0),
        2 * oracle_resnet_block(3, 128, 128, 8 * h0, 8 * w0),
        oracle_conv(3, 128, 3, 8 * h0, 8 * w0),
    ]


def oracle_decoder(height: int, width: int) -> int:
    return sum(oracle_decoder_terms(height, width))


def oracle_sd2_stage_terms(height: int, width: int) -> dict[str, list[int]]:
    """U-Net denoiser stages as individual summands, keyed by stage name."""
    h0, w0 = height // 8, width // 8
    return {
        "conv_in": [oracle_conv(3, 4, 320, h0, w0)],
        "down_1": [
            2 * oracle_resnet_block(3, 320, 320, h0, w0),
            2 * oracle_transformer(320, 0, 320, 1, h0 * w0),
            2 * oracle_cross_attn(320, 1024, 1920, 320, 1, h0 * w0, 77),
            4 * h0 * w0 * 320**2,
            oracle_conv(3, 320, 320, h0 // 2, w0 // 2),
        ],
        "down_2": [
            oracle_resnet_block(3, 320, 640, h0 // 2, w0 // 2),
            oracle_resnet_block(3, 640, 640, h0 // 2, w0 // 2),
            2 * oracle_transformer(640, 0, 640, 1, h0 * w0 // 4),
            2 * oracle_cross_attn(640, 1024, 3840, 640, 1, h0 * w0 // 4, 77),
            h0 * w0 * 640**2,
            oracle_conv(3, 640, 640, h0 // 4, w0 // 4),
        ],
        "down_3": [
            oracle_resnet_block(3, 640, 1280, h0 // 4, w0 // 4),
            oracle_resnet_block(3, 1280, 1280, h0 // 4, w0 // 4),
            2 * oracle_transformer(1280, 0, 1280, 1, h0 * w0 // 16),
            2 * oracle_cross_attn(1280, 1024, 7680, 1280, 1, h0 * w0 // 16, 77),
            (h0 * w0 // 4) * 1280**2,
            oracle_conv(3, 1280, 1280, h0 // 8, w0 // 8),
        ],
        "down_4": [
            2 * oracle_resnet_block(3, 1280, 1280, h0 // 8, w0 // 8),
        ],
        "mid": [
            2 * oracle_resnet_block(3, 1280, 1280, h0 // 8, w0 // 8),
            oracle_transformer(1280, 0, 1280, 1, h0 * w0 // 64),
            oracle_cross_attn(1280, 1024, 7680, 1280, 1, h0 * w0 // 64, 77),
            (h0 * w0 // 16) * 1280**2,
        ],
        "up_1": [
            3 * oracle_resnet_block(3, 2560, 1280, h0 // 8, w0 // 8),
            oracle_conv(3, 1280, 1280, h0 // 4, w0 // 4),
        ],
        "up_2": [
            2 * oracle_resnet_block(3, 2560, 1280, h0 // 4, w0 // 4),
            oracle_resnet_block(3, 1920, 1280, h0 // 4, w0 // 4),
            3 * oracle_transformer(1280, 0, 1280, 1, h0 * w0 // 16),
            3 * oracle_cross_attn(1280, 1024, 7680, 1280, 1, h0 * w0 // 16, 77),
            (3 * h0 * w0 // 4) * 1280**2,
            oracle_conv(3, 1280, 1280, h0 // 2, w0 // 2),
        ],
        "up_3": [
            oracle_resnet_block(3, 1920, 640, h0 // 2, w0 // 2),
            oracle_resnet_block(3, 1280, 640, h0 // 2, w0 // 2),
            oracle_resnet_block(3, 960, 640, h0 // 2, w0 // 2),
            3 * oracle_transformer(640, 0, 640, 1, h0 * w0 // 4),
            3 * oracle_cross_attn(640, 1024, 3840, 640, 1, h0 * w0 // 4, 77),
            3 * h0 * w0 * 640**2,
            oracle_conv(3, 640, 640, h0, w0),
        ],
        "up_4": [
            2 * oracle_resnet_block(3, 640, 320, h0, w0),
            oracle_resnet_block(3, 960, 320, h0, w0),
            3 * oracle_transformer(320, 0, 320, 1, h0 * w0),
            3 * oracle_cross_attn(320, 1024, 1920, 320, 1, h0 * w0, 77),
            12 * h0 * w0 * 320**2,
        ],
        "conv_out": [oracle_conv(3, 320, 4, h0, w0)],
    }


def oracle_sd2_step(height: int, width: int) -> int:
    return sum(
        term
        for terms in oracle_sd2_stage_terms(height, width).values()
        for term in terms
    )


def oracle_denoise_step(model: str, height: int, width: int) -> int:
    """Single denoiser forward pass, exact FLOPs, per published composition."""
    latent_tokens = height * width // 256
    if model == "flux":
        n_ctx = latent_tokens + 512
        return oracle_mmdit(3072, 12288, 3072, 19, n_ctx) + oracle_transformer(
            3072, 12288, 3072, 38, n_ctx
        )
    if model == "qwen":
        n_ctx = latent_tokens + 12
        return oracle_mmdit(3072, 12288, 3072, 60, n_ctx)
    if model == "sd35":
        n_ctx = latent_tokens + 333
        return oracle_mmdit(2432, 9478, 2432, 38, n_ctx)
    if model == "sd2":
        return oracle_sd2_step(height, width)
    raise ValueError(f"unknown model {model!r}")


def oracle_text_encoder_terms(model: str) -> list[int]:
    """Text/embedding stack summands per model, including additive biases."""
    glu_bias = 24 * 10240 * 4097
    if model == "flux":
        return [
            oracle_transformer(768, 3072, 768, 12, 77),
            oracle_transformer(4096, 10240, 4096, 24, 512),
            glu_bias,
        ]
    if model == "qwen":
        return [
            oracle_transformer(3584, 18944, 3584, 28, 12),
            28 * 12 * 2 * (2 * 3584 * (512 - 3584)),
        ]
    if model == "sd35":
        return [
            oracle_transformer(768, 3072, 768, 12, 77),
            oracle_transformer(1280, 5120, 1280, 32, 77),
            oracle_transformer(4096, 10240, 4096, 24, 256),
            glu_bias,
        ]
    raise ValueError(f"no text encoder composition for {model!r}")


def oracle_text_encoder(model: str) -> int:
    return sum(oracle_text_encoder_terms(model))
