#define BS 16

__global__ void matmul(const float* a, const float* b, float* c, int n)
{
    __shared__ float as[BS][BS];
    __shared__ float bs[BS][BS];
    int row = blockIdx.y*blockDim.y+threadIdx.y;
    int col = blockIdx.x*blockDim.x+threadIdx.x;
    float acc = 0.0f;
    for (int t = 0; t < n / BS; ++t) {
        as[threadIdx.y][threadIdx.x] = a[row*n + t*BS + threadIdx.x];
        bs[threadIdx.y][threadIdx.x] = b[(t*BS + threadIdx.y)*n + col];
        __syncthreads();
        for (int k = 0; k < BS; ++k) acc += as[threadIdx.y][k]*bs[k][threadIdx.x];
        __syncthreads();
    }
    c[row*n + col] = acc;
}
