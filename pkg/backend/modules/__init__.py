# Decoding, windowing and scheduling modules
