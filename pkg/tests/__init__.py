# Orbita Tests
