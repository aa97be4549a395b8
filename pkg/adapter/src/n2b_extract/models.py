"""Model registry: a residual CNN, a vision transformer, and their
image-text (contrastively trained) counterparts.

The image-text ResNet is the attention-pooled variant: a three-conv stem,
blur-pooled strided downsampling, and a multi-head attention pool instead
of global average pooling. It is defined locally so the vision tower can
be built (and randomly initialized) without any checkpoint ecosystem.
"""

from collections import OrderedDict

import torch
import torch.nn.functional as F
from torch import nn

from .errors import UnknownModel, WeightsUnavailable
from .preprocess import CLIP_SPEC, IMAGENET_SPEC

MODEL_NAMES = ("CLIP-ResNet50", "CLIP-ViT-B/32", "ResNet50", "ViT-B/32")


class _Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, inplanes, planes, stride=1):
        super().__init__()
        self.conv1 = nn.Conv2d(inplanes, planes, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.relu1 = nn.ReLU(inplace=True)
        self.conv2 = nn.Conv2d(planes, planes, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.relu2 = nn.ReLU(inplace=True)
        # downsampling happens in an average pool, not a strided conv
        self.avgpool = nn.AvgPool2d(stride) if stride > 1 else nn.Identity()
        self.conv3 = nn.Conv2d(planes, planes * self.expansion, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(planes * self.expansion)
        self.relu3 = nn.ReLU(inplace=True)
        self.downsample = None
        if stride > 1 or inplanes != planes * self.expansion:
            self.downsample = nn.Sequential(
                OrderedDict(
                    [
                        ("pool", nn.AvgPool2d(stride) if stride > 1 else nn.Identity()),
                        ("conv", nn.Conv2d(inplanes, planes * self.expansion, 1, bias=False)),
                        ("bn", nn.BatchNorm2d(planes * self.expansion)),
                    ]
                )
            )

    def forward(self, x):
        identity = x
        out = self.relu1(self.bn1(self.conv1(x)))
        out = self.relu2(self.bn2(self.conv2(out)))
        out = self.avgpool(out)
        out = self.bn3(self.conv3(out))
        if self.downsample is not None:
            identity = self.downsample(x)
        return self.relu3(out + identity)


class _AttentionPool2d(nn.Module):
    def __init__(self, spacial_dim, embed_dim, num_heads, output_dim=None):
        super().__init__()
        self.positional_embedding = nn.Parameter(
            torch.randn(spacial_dim**2 + 1, embed_dim) / embed_dim**0.5
        )
        self.k_proj = nn.Linear(embed_dim, embed_dim)
        self.q_proj = nn.Linear(embed_dim, embed_dim)
        self.v_proj = nn.Linear(embed_dim, embed_dim)
        self.c_proj = nn.Linear(embed_dim, output_dim or embed_dim)
        self.num_heads = num_heads

    def forward(self, x):
        x = x.flatten(start_dim=2).permute(2, 0, 1)  # NCHW -> (HW)NC
        x = torch.cat([x.mean(dim=0, keepdim=True), x], dim=0)
        x = x + self.positional_embedding[:, None, :].to(x.dtype)
        x, _ = F.multi_head_attention_forward(
            query=x[:1],
            key=x,
            value=x,
            embed_dim_to_check=x.shape[-1],
            num_heads=self.num_heads,
            q_proj_weight=self.q_proj.weight,
            k_proj_weight=self.k_proj.weight,
            v_proj_weight=self.v_proj.weight,
            in_proj_weight=None,
            in_proj_bias=torch.cat(
                [self.q_proj.bias, self.k_proj.bias, self.v_proj.bias]
            ),
            bias_k=None,
            bias_v=None,
            add_zero_attn=False,
            dropout_p=0.0,
            out_proj_weight=self.c_proj.weight,
            out_proj_bias=self.c_proj.bias,
            use_separate_proj_weight=True,
            training=self.training,
            need_weights=False,
        )
        return x.squeeze(0)


class ModifiedResNet(nn.Module):
    """Attention-pooled residual tower (50-layer configuration by default)."""

    def __init__(self, layers=(3, 4, 6, 3), output_dim=1024, heads=32,
                 input_resolution=224, width=64):
        super().__init__()
        self.conv1 = nn.Conv2d(3, width // 2, 3, stride=2, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(width // 2)
        self.relu1 = nn.ReLU(inplace=True)
        self.conv2 = nn.Conv2d(width // 2, width // 2, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(width // 2)
        self.relu2 = nn.ReLU(inplace=True)
        self.conv3 = nn.Conv2d(width // 2, width, 3, padding=1, bias=False)
        self.bn3 = nn.BatchNorm2d(width)
        self.relu3 = nn.ReLU(inplace=True)
        self.avgpool = nn.AvgPool2d(2)

        self._inplanes = width
        self.layer1 = self._make_layer(width, layers[0])
        self.layer2 = self._make_layer(width * 2, layers[1], stride=2)
        self.layer3 = self._make_layer(width * 4, layers[2], stride=2)
        self.layer4 = self._make_layer(width * 8, layers[3], stride=2)

        embed_dim = width * 32
        self.attnpool = _AttentionPool2d(
            input_resolution // 32, embed_dim, heads, output_dim
        )

    def _make_layer(self, planes, blocks, stride=1):
        layers = [_Bottleneck(self._inplanes, planes, stride)]
        self._inplanes = planes * _Bottleneck.expansion
        for _ in range(1, blocks):
            layers.append(_Bottleneck(self._inplanes, planes))
        return nn.Sequential(*layers)

    def forward(self, x):
        x = self.relu1(self.bn1(self.conv1(x)))
        x = self.relu2(self.bn2(self.conv2(x)))
        x = self.relu3(self.bn3(self.conv3(x)))
        x = self.avgpool(x)
        x = self.layer1(x)
        x = self.layer2(x)
        x = self.layer3(x)
        x = self.layer4(x)
        return self.attnpool(x)


def _build_resnet50(pretrained):
    from torchvision.models import ResNet50_Weights, resnet50

    weights = ResNet50_Weights.IMAGENET1K_V2 if pretrained else None
    return resnet50(weights=weights), IMAGENET_SPEC


def _build_vit_b_32(pretrained):
    from torchvision.models import ViT_B_32_Weights, vit_b_32

    weights = ViT_B_32_Weights.IMAGENET1K_V1 if pretrained else None
    return vit_b_32(weights=weights), IMAGENET_SPEC


def _build_clip_resnet50(pretrained):
    if pretrained:
        raise WeightsUnavailable(
            "no checkpoint source is wired for CLIP-ResNet50; pass --random-init"
        )
    return ModifiedResNet(), CLIP_SPEC


def _build_clip_vit_b_32(pretrained):
    from transformers import CLIPVisionConfig, CLIPVisionModel

    if pretrained:
        try:
            model = CLIPVisionModel.from_pretrained("openai/clip-vit-base-patch32")
        except Exception as exc:
            raise WeightsUnavailable(
                f"cannot fetch CLIP-ViT-B/32 weights ({exc}); pass --random-init"
            ) from exc
    else:
        # config defaults are exactly the B/32 geometry:
        # 12 layers, 768 wide, 12 heads, 224px input, 32px patches
        model = CLIPVisionModel(CLIPVisionConfig())
    return model, CLIP_SPEC


_BUILDERS = {
    "ResNet50": _build_resnet50,
    "ViT-B/32": _build_vit_b_32,
    "CLIP-ResNet50": _build_clip_resnet50,
    "CLIP-ViT-B/32": _build_clip_vit_b_32,
}


def list_models() -> tuple[str, ...]:
    """Stable sorted listing of supported model names."""
    return MODEL_NAMES


def build_model(name: str, pretrained: bool = True, seed: int = 0):
    """Return (eval-mode torch module, preprocessing spec) for a model name.

    With pretrained=False the weights are randomly initialized from the
    given seed, which keeps every run of a hermetic pipeline bit-identical.
    """
    if name not in _BUILDERS:
        raise UnknownModel(
            f"unknown model {name!r} (available: {', '.join(MODEL_NAMES)})"
        )
    if pretrained:
        torch.manual_seed(0)  # pretrained paths ignore the init RNG anyway
    else:
        torch.manual_seed(seed)
    model, spec = _BUILDERS[name](pretrained)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model, spec


def list_layers(name: str) -> tuple[str, ...]:
    """Sorted hookable module names for one model (random-init build)."""
    model, _ = build_model(name, pretrained=False, seed=0)
    return tuple(sorted(n for n, _ in model.named_modules() if n))
