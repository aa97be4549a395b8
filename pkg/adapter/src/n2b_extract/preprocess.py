"""Image loading and per-family preprocessing pipelines."""

from dataclasses import dataclass

from PIL import Image
from torchvision import transforms
from torchvision.transforms import InterpolationMode

from .errors import UnreadableImage

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".webp", ".tiff")


@dataclass(frozen=True)
class PreprocessSpec:
    """Resize/crop/normalize constants for one model family."""

    resize: int
    crop: int
    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    interpolation: str = "bilinear"

    def build(self):
        interp = {
            "bilinear": InterpolationMode.BILINEAR,
            "bicubic": InterpolationMode.BICUBIC,
        }[self.interpolation]
        return transforms.Compose(
            [
                transforms.Resize(self.resize, interpolation=interp),
                transforms.CenterCrop(self.crop),
                transforms.ToTensor(),
                transforms.Normalize(mean=self.mean, std=self.std),
            ]
        )


IMAGENET_SPEC = PreprocessSpec(
    resize=256,
    crop=224,
    mean=(0.485, 0.456, 0.406),
    std=(0.229, 0.224, 0.225),
    interpolation="bilinear",
)

CLIP_SPEC = PreprocessSpec(
    resize=224,
    crop=224,
    mean=(0.48145466, 0.4578275, 0.40821073),
    std=(0.26862954, 0.26130258, 0.27577711),
    interpolation="bicubic",
)


def load_image(path: str) -> Image.Image:
    """Open an image as RGB; a failure names the offending file."""
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except Exception as exc:
        raise UnreadableImage(f"cannot read image {path}: {exc}") from exc
