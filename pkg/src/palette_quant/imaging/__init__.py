from .imageio import RawImage, load_image, save_image, write_palette

__all__ = ["RawImage", "load_image", "save_image", "write_palette"]
